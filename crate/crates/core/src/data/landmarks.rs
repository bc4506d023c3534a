use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{format_sig9, Dimensionality, Landmark, LandmarkFrame, LandmarkTrack, NUM_POINTS};
use crate::error::{Error, Result};

/// Reads a landmark CSV with columns `frame,point_index,x,y[,z]`.
///
/// Rows of one frame must be contiguous and frames must appear in increasing
/// order. The presence of a `z` column selects 3D mode for the whole track.
pub fn load_landmarks(path: impl AsRef<Path>) -> Result<LandmarkTrack> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let malformed = |row: usize, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(0, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let dimensionality = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["frame", "point_index", "x", "y"] => Dimensionality::Planar,
        ["frame", "point_index", "x", "y", "z"] => Dimensionality::Spatial,
        _ => return Err(malformed(0, "expected header `frame,point_index,x,y[,z]`".into())),
    };

    let mut frames = Vec::new();
    let mut current: Option<(u32, [Option<Landmark>; NUM_POINTS])> = None;

    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| malformed(row_no, e.to_string()))?;
        if row.len() != header.len() {
            return Err(malformed(
                row_no,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let num = |k: usize| -> Result<f64> {
            row[k]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(row_no, format!("invalid {} `{}`", header[k], &row[k])))
        };
        let frame: u32 = row[0]
            .trim()
            .parse()
            .map_err(|_| malformed(row_no, format!("invalid frame `{}`", &row[0])))?;
        let index: usize = row[1]
            .trim()
            .parse()
            .ok()
            .filter(|i| (1..=NUM_POINTS).contains(i))
            .ok_or_else(|| malformed(row_no, format!("point_index `{}` not in 1..=21", &row[1])))?;
        let point = match dimensionality {
            Dimensionality::Planar => Landmark::planar(num(2)?, num(3)?),
            Dimensionality::Spatial => Landmark::spatial(num(2)?, num(3)?, num(4)?),
        };

        match &mut current {
            Some((f, _)) if *f == frame => {}
            Some((f, _)) if frame < *f => {
                return Err(Error::NonMonotoneFrames {
                    previous: *f,
                    found: frame,
                })
            }
            _ => {
                if let Some((f, pts)) = current.take() {
                    frames.push(finish_frame(f, pts)?);
                }
                if let Some(last) = frames.last() {
                    if frame <= last.frame_index() {
                        return Err(Error::NonMonotoneFrames {
                            previous: last.frame_index(),
                            found: frame,
                        });
                    }
                }
                current = Some((frame, [None; NUM_POINTS]));
            }
        }
        let (_, pts) = current.as_mut().expect("frame in progress");
        if pts[index - 1].replace(point).is_some() {
            return Err(malformed(row_no, format!("frame {frame}: duplicate point {index}")));
        }
    }
    if let Some((f, pts)) = current.take() {
        frames.push(finish_frame(f, pts)?);
    }
    if frames.is_empty() {
        return Err(Error::InvalidLandmarks(format!("{}: no frames", path.display())));
    }
    Ok(LandmarkTrack { frames, dimensionality })
}

fn finish_frame(frame: u32, pts: [Option<Landmark>; NUM_POINTS]) -> Result<LandmarkFrame> {
    let mut points = Vec::with_capacity(NUM_POINTS);
    for (i, p) in pts.into_iter().enumerate() {
        points.push(p.ok_or(Error::MissingPoint { frame, index: i + 1 })?);
    }
    LandmarkFrame::new(frame, points)
}

/// Writes frames in the canonical landmark CSV form.
pub fn write_landmarks<W: Write>(out: W, frames: &[LandmarkFrame]) -> std::io::Result<()> {
    let spatial = frames
        .first()
        .is_some_and(|f| f.dimensionality() == Dimensionality::Spatial);
    let mut w = std::io::BufWriter::new(out);
    if spatial {
        writeln!(w, "frame,point_index,x,y,z")?;
    } else {
        writeln!(w, "frame,point_index,x,y")?;
    }
    for f in frames {
        for (i, p) in f.points().iter().enumerate() {
            write!(
                w,
                "{},{},{},{}",
                f.frame_index(),
                i + 1,
                format_sig9(p.x),
                format_sig9(p.y)
            )?;
            if spatial {
                write!(w, ",{}", format_sig9(p.z.unwrap_or(0.0)))?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

pub fn save_landmarks(path: impl AsRef<Path>, frames: &[LandmarkFrame]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_landmarks(file, frames).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;
    use std::fs;

    fn frame_rows(frame: u32, skip: Option<usize>, with_z: bool) -> String {
        let mut s = String::new();
        for i in 1..=NUM_POINTS {
            if Some(i) == skip {
                continue;
            }
            let (x, y) = (i as f64 * 3.0 + frame as f64, i as f64 * 1.5);
            if with_z {
                writeln!(s, "{frame},{i},{x},{y},{}", i as f64 * 0.25).unwrap();
            } else {
                writeln!(s, "{frame},{i},{x},{y}").unwrap();
            }
        }
        s
    }

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join("landmarks.csv");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn one_frame_of_21_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            &format!("frame,point_index,x,y\n{}", frame_rows(0, None, false)),
        );
        let track = load_landmarks(&p).unwrap();
        assert_eq!(track.frames.len(), 1);
        assert_eq!(track.dimensionality, Dimensionality::Planar);
        assert_eq!(track.frames[0].point(4).x, 12.0);
    }

    #[test]
    fn missing_point_names_frame_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "frame,point_index,x,y\n{}{}",
            frame_rows(0, None, false),
            frame_rows(1, Some(17), false)
        );
        let p = write(dir.path(), &body);
        let err = load_landmarks(&p).unwrap_err();
        assert!(matches!(err, Error::MissingPoint { frame: 1, index: 17 }), "{err:?}");
    }

    #[test]
    fn z_column_selects_spatial_mode() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            &format!("frame,point_index,x,y,z\n{}", frame_rows(5, None, true)),
        );
        let track = load_landmarks(&p).unwrap();
        assert_eq!(track.dimensionality, Dimensionality::Spatial);
        assert_eq!(track.frames[0].point(2).z, Some(0.5));
    }

    #[test]
    fn non_monotone_frames_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "frame,point_index,x,y\n{}{}",
            frame_rows(3, None, false),
            frame_rows(2, None, false)
        );
        let p = write(dir.path(), &body);
        assert!(matches!(
            load_landmarks(&p),
            Err(Error::NonMonotoneFrames { previous: 3, found: 2 })
        ));
        // a frame may not reappear after another frame started
        let body = format!(
            "frame,point_index,x,y\n{}{}{}",
            frame_rows(1, None, false),
            frame_rows(2, None, false),
            frame_rows(1, None, false)
        );
        let p = write(dir.path(), &body);
        assert!(load_landmarks(&p).is_err());
    }

    #[test]
    fn out_of_range_index_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "frame,point_index,x,y\n0,22,1,1\n");
        assert!(matches!(load_landmarks(&p), Err(Error::MalformedRow { row: 1, .. })));
    }

    #[test]
    fn canonical_file_round_trips_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "frame,point_index,x,y,z\n{}{}",
            frame_rows(0, None, true),
            frame_rows(1, None, true)
        );
        let p = write(dir.path(), &body);
        let track = load_landmarks(&p).unwrap();
        let out = dir.path().join("again.csv");
        save_landmarks(&out, &track.frames).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), body);
    }
}
