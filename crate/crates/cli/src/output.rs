//! Artifact writers. Everything written here is a pure function of the job:
//! no timestamps, no host names, fixed field order.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use image::{GrayImage, RgbImage};
use serde::Serialize;
use zalcman::sets::GridSet;

pub const VERSION_FILE: &str = "VERSION";

pub struct OutDir {
    root: PathBuf,
    png: bool,
}

impl OutDir {
    pub fn create(root: &Path, png: bool) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            png,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn create_file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    /// Version sidecar plus the resolved job, so the run can be repeated from the output alone.
    pub fn stamp<T: Serialize>(&self, command: &str, job: &T) -> Result<()> {
        let mut out = self.create_file(VERSION_FILE)?;
        writeln!(out, "zalcman {}", env!("CARGO_PKG_VERSION"))?;
        out.flush()?;
        self.json(
            "config.json",
            &serde_json::json!({ "command": command, "job": job }),
        )
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut out = self.create_file(name)?;
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn csv<T: Serialize>(
        &self,
        name: &str,
        records: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        let mut writer = csv::Writer::from_writer(self.create_file(name)?);
        for record in records {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Like [`OutDir::csv`], but writes `header` even when there are no records.
    pub fn csv_with_header<T: Serialize>(
        &self,
        name: &str,
        header: &[&str],
        records: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(self.create_file(name)?);
        writer.write_record(header)?;
        for record in records {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn points_csv(&self, name: &str, set: &GridSet) -> Result<()> {
        let mut out = self.create_file(name)?;
        set.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Mask as binary PGM (marked cells black), plus a PNG copy when requested.
    pub fn mask(&self, stem: &str, set: &GridSet) -> Result<()> {
        let mut out = self.create_file(&format!("{stem}.pgm"))?;
        set.write_pgm(&mut out)?;
        out.flush()?;
        if self.png {
            let n = set.frame().resolution as u32;
            let pixels = set
                .mask()
                .iter()
                .map(|&m| if m { 0 } else { 255 })
                .collect();
            let image = GrayImage::from_raw(n, n, pixels).expect("mask matches frame");
            image.save(self.path(&format!("{stem}.png")))?;
        }
        Ok(())
    }

    /// RGB image as binary PPM, plus a PNG copy when requested.
    pub fn rgb(&self, stem: &str, image: &RgbImage) -> Result<()> {
        let mut out = self.create_file(&format!("{stem}.ppm"))?;
        write!(out, "P6\n{} {}\n255\n", image.width(), image.height())?;
        out.write_all(image.as_raw())?;
        out.flush()?;
        if self.png {
            image.save(self.path(&format!("{stem}.png")))?;
        }
        Ok(())
    }
}

const WHITE: [u8; 3] = [255, 255, 255];
const GRAY: [u8; 3] = [150, 150, 150];
const BLACK: [u8; 3] = [0, 0, 0];
const RED: [u8; 3] = [200, 30, 30];

/// Three squares side by side: `m` in gray, the overlay, `j` in black.
/// In the overlay, cells of `j` inside `m` are black and outside `m` red.
pub fn comparison_panel(m: &GridSet, j: &GridSet) -> RgbImage {
    let n = m.frame().resolution as u32;
    RgbImage::from_fn(3 * n, n, |x, y| {
        let (panel, col) = (x / n, (x % n) as usize);
        let (in_m, in_j) = (m.get(y as usize, col), j.get(y as usize, col));
        let rgb = match (panel, in_m, in_j) {
            (0, true, _) => GRAY,
            (2, _, true) => BLACK,
            (1, true, true) => BLACK,
            (1, false, true) => RED,
            (1, true, false) => GRAY,
            _ => WHITE,
        };
        image::Rgb(rgb)
    })
}
