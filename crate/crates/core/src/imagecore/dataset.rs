//! CIFAR-10 binary batches and PNG directories with a `labels.csv` sidecar.

use std::collections::BTreeMap;
use std::path::Path;

use super::{u8_from_unit, unit_from_u8, Image, LabeledImage, Shape};
use crate::error::{Result, StbaError};

pub const CIFAR10_CLASSES: usize = 10;
const CIFAR10_SIDE: usize = 32;
const CIFAR10_PIXELS: usize = 3 * CIFAR10_SIDE * CIFAR10_SIDE;
/// One label byte followed by the R, G and B planes.
pub const CIFAR10_RECORD_LEN: usize = 1 + CIFAR10_PIXELS;

/// Parses a CIFAR-10 binary batch (`data_batch_*.bin` / `test_batch.bin`).
pub fn load_cifar10_batch(bytes: &[u8]) -> Result<Vec<LabeledImage>> {
    if !bytes.len().is_multiple_of(CIFAR10_RECORD_LEN) {
        return Err(StbaError::Format(format!(
            "CIFAR-10 batch length {} is not a multiple of {CIFAR10_RECORD_LEN}",
            bytes.len()
        )));
    }
    let shape = Shape::new(3, CIFAR10_SIDE, CIFAR10_SIDE);
    bytes
        .chunks_exact(CIFAR10_RECORD_LEN)
        .enumerate()
        .map(|(i, record)| {
            let label = usize::from(record[0]);
            if label >= CIFAR10_CLASSES {
                return Err(StbaError::Format(format!(
                    "record {i}: label byte {label} is not a CIFAR-10 class"
                )));
            }
            let data = record[1..].iter().map(|&b| unit_from_u8(b)).collect();
            Ok(LabeledImage {
                image: Image::from_parts_unchecked(shape, data),
                label,
            })
        })
        .collect()
}

pub fn load_cifar10_file(path: &Path) -> Result<Vec<LabeledImage>> {
    let bytes = std::fs::read(path).map_err(|e| StbaError::io(path, e))?;
    load_cifar10_batch(&bytes)
}

/// Serializes one item back into a 3073-byte CIFAR-10 record.
pub fn encode_cifar10_record(item: &LabeledImage) -> Result<Vec<u8>> {
    let expected = Shape::new(3, CIFAR10_SIDE, CIFAR10_SIDE);
    if item.image.shape() != expected {
        return Err(StbaError::shape(expected, item.image.shape()));
    }
    let label = u8::try_from(item.label)
        .ok()
        .filter(|&l| usize::from(l) < CIFAR10_CLASSES)
        .ok_or(StbaError::LabelOutOfRange {
            label: item.label,
            num_classes: CIFAR10_CLASSES,
        })?;
    let mut out = Vec::with_capacity(CIFAR10_RECORD_LEN);
    out.push(label);
    out.extend(item.image.data().iter().map(|&v| u8_from_unit(v)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PngFileError {
    pub filename: String,
    pub message: String,
}

/// Result of scanning a PNG directory: the loaded items in filename order
/// plus per-file rejections.
#[derive(Debug, Default)]
pub struct PngDirLoad {
    pub items: Vec<LabeledImage>,
    pub filenames: Vec<String>,
    pub errors: Vec<PngFileError>,
}

#[derive(serde::Deserialize)]
struct LabelRow {
    filename: String,
    label: usize,
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, usize>> {
    let file = std::fs::File::open(path).map_err(|e| StbaError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["filename", "label"] {
        return Err(StbaError::Format(format!(
            "{}: expected header `filename,label`, got `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut labels = BTreeMap::new();
    for row in reader.deserialize() {
        let row: LabelRow = row?;
        labels.insert(row.filename, row.label);
    }
    Ok(labels)
}

fn decode_png(path: &Path) -> Result<Image> {
    let rgb = image::open(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let shape = Shape::new(3, h, w);
    let mut data = vec![0.0; shape.len()];
    for (x, y, px) in rgb.enumerate_pixels() {
        for c in 0..3 {
            data[(c * h + y as usize) * w + x as usize] = unit_from_u8(px[c]);
        }
    }
    Image::new(shape, data)
}

/// Loads every `*.png` in `dir` that is listed in `dir/labels.csv`.
/// Labels must be below `num_classes`.
pub fn load_png_dir(dir: &Path, num_classes: usize) -> Result<PngDirLoad> {
    let labels = read_labels(&dir.join("labels.csv"))?;
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| StbaError::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| name.to_ascii_lowercase().ends_with(".png"))
        .collect();
    names.sort();

    let mut load = PngDirLoad::default();
    for name in names {
        let Some(&label) = labels.get(&name) else {
            log::warn!("{name}: not listed in labels.csv, skipping");
            continue;
        };
        if label >= num_classes {
            load.errors.push(PngFileError {
                filename: name,
                message: format!("label {label} out of range for {num_classes} classes"),
            });
            continue;
        }
        match decode_png(&dir.join(&name)) {
            Ok(image) => {
                load.items.push(LabeledImage { image, label });
                load.filenames.push(name);
            }
            Err(e) => load.errors.push(PngFileError {
                filename: name,
                message: e.to_string(),
            }),
        }
    }
    Ok(load)
}

/// Writes an image as 8-bit PNG. Single-channel images become grayscale,
/// three-channel images RGB.
pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let at = |c: usize, x: u32, y: u32| u8_from_unit(img.get(c, y as usize, x as usize));
    match img.channels() {
        1 => image::GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([at(0, x, y)]))
            .save(path)?,
        3 => image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
            image::Rgb([at(0, x, y), at(1, x, y), at(2, x, y)])
        })
        .save(path)?,
        c => {
            return Err(StbaError::InvalidImage(format!(
                "cannot write {c}-channel image as PNG"
            )))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: u8) -> Vec<u8> {
        let mut r = vec![fill; CIFAR10_RECORD_LEN];
        r[0] = label;
        r
    }

    #[test]
    fn cifar_empty_and_saturated() {
        assert!(load_cifar10_batch(&[]).unwrap().is_empty());
        let items = load_cifar10_batch(&record(7, 255)).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].label, 7);
        assert!(items[0].image.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cifar_preserves_order_and_planes() {
        let mut bytes = record(1, 0);
        bytes[1] = 255; // R plane, pixel (0, 0)
        bytes[1 + 1024 + 33] = 51; // G plane, pixel (1, 1)
        bytes.extend(record(2, 0));
        let items = load_cifar10_batch(&bytes).unwrap();
        assert_eq!(items.iter().map(|i| i.label).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(items[0].image.get(0, 0, 0), 1.0);
        assert_eq!(items[0].image.get(1, 1, 1), unit_from_u8(51));
        assert_eq!(
            encode_cifar10_record(&items[0]).unwrap(),
            bytes[..CIFAR10_RECORD_LEN]
        );
    }

    #[test]
    fn cifar_format_errors() {
        assert!(matches!(
            load_cifar10_batch(&[0u8; 100]),
            Err(StbaError::Format(_))
        ));
        assert!(matches!(
            load_cifar10_batch(&record(10, 0)),
            Err(StbaError::Format(_))
        ));
    }

    #[test]
    fn png_dir_loading() {
        let dir = tempfile::tempdir().unwrap();
        assert!(
            load_png_dir(dir.path(), 10).is_err(),
            "missing labels.csv is fatal"
        );

        std::fs::write(dir.path().join("labels.csv"), "filename,label\n").unwrap();
        assert!(load_png_dir(dir.path(), 10).unwrap().items.is_empty());

        let white = Image::filled(Shape::new(3, 2, 2), 1.0);
        save_png(&white, &dir.path().join("b.png")).unwrap();
        save_png(&white, &dir.path().join("a.png")).unwrap();
        save_png(&white, &dir.path().join("unlisted.png")).unwrap();
        save_png(&white, &dir.path().join("c.png")).unwrap();
        std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
        std::fs::write(
            dir.path().join("labels.csv"),
            "filename,label\nb.png,3\na.png,1\nc.png,12\nbroken.png,0\n",
        )
        .unwrap();
        let load = load_png_dir(dir.path(), 10).unwrap();
        assert_eq!(load.filenames, ["a.png", "b.png"]);
        assert_eq!(load.items[1].label, 3);
        assert_eq!(load.items[1].image, white);
        let rejected: Vec<_> = load.errors.iter().map(|e| e.filename.as_str()).collect();
        assert_eq!(rejected, ["broken.png", "c.png"]);
    }

    #[test]
    fn png_dir_malformed_csv_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("labels.csv"),
            "filename,label\na.png,seven\n",
        )
        .unwrap();
        assert!(load_png_dir(dir.path(), 10).is_err());
        std::fs::write(dir.path().join("labels.csv"), "name,class\na.png,1\n").unwrap();
        assert!(load_png_dir(dir.path(), 10).is_err());
    }
}
