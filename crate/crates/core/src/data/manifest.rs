use std::collections::HashSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use super::{format_sig9, Label, VideoRecord, DEFAULT_FPS};
use crate::error::{Error, Result};

const HEADER: [&str; 5] = ["video_id", "frames_dir", "landmarks_path", "label", "fps"];

/// Reads a manifest CSV. Relative paths are resolved against the manifest's
/// own directory. An empty `label` cell means unlabeled; an empty `fps` cell
/// means the default 50 Hz.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<VideoRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let malformed = |row: usize, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers().map_err(|e| malformed(0, e.to_string()))?;
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(malformed(0, format!("expected header `{}`", HEADER.join(","))));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| malformed(row_no, e.to_string()))?;
        if row.len() != HEADER.len() {
            return Err(malformed(row_no, format!("expected 5 fields, found {}", row.len())));
        }
        let field = |k: usize| row[k].trim();
        let video_id = field(0).to_string();
        if video_id.is_empty() {
            return Err(malformed(row_no, "empty video_id".into()));
        }
        let label = match field(3) {
            "" => None,
            s => Some(s.parse::<Label>().map_err(|e| malformed(row_no, e))?),
        };
        let fps = match field(4) {
            "" => DEFAULT_FPS,
            s => s
                .parse::<f64>()
                .map_err(|_| malformed(row_no, format!("invalid fps `{s}`")))?,
        };
        if !(fps.is_finite() && fps > 0.0) {
            return Err(malformed(row_no, format!("fps must be positive, found {fps}")));
        }
        if !seen.insert(video_id.clone()) {
            return Err(Error::DuplicateVideo(video_id));
        }
        records.push(VideoRecord {
            video_id,
            frames_dir: base.join(field(1)),
            landmarks_path: base.join(field(2)),
            label,
            fps,
        });
    }
    Ok(records)
}

/// Writes a manifest; paths under the manifest's directory are stored
/// relative to it so the corpus can be moved as a whole.
pub fn write_manifest(path: impl AsRef<Path>, records: &[VideoRecord]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| Error::io(path, e.into());

    writer.write_record(HEADER).map_err(csv_err)?;
    for r in records {
        let label = r.label.map(Label::as_str).unwrap_or("");
        writer
            .write_record([
                r.video_id.as_str(),
                &relative_to(base, &r.frames_dir),
                &relative_to(base, &r.landmarks_path),
                label,
                &format_sig9(r.fps),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn relative_to(base: &Path, p: &Path) -> String {
    let rel: PathBuf = if base.as_os_str().is_empty() {
        p.to_path_buf()
    } else {
        p.strip_prefix(base)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| p.to_path_buf())
    };
    rel.to_string_lossy().replace('\\', "/")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.csv");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "video_id,frames_dir,landmarks_path,label,fps\n\
             a,va/frames,va/landmarks.csv,spontaneous,50\n\
             b,vb/frames,vb/landmarks.csv,posed,25\n",
        );
        let recs = load_manifest(&p).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].label, Some(Label::Spontaneous));
        assert_eq!(recs[1].fps, 25.0);
        assert_eq!(recs[1].frames_dir, dir.path().join("vb/frames"));
    }

    #[test]
    fn unknown_label_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "video_id,frames_dir,landmarks_path,label,fps\n\
             a,f,l.csv,posed,50\n\
             b,f,l.csv,smirk,50\n",
        );
        let err = load_manifest(&p).unwrap_err();
        match &err {
            Error::MalformedRow { row, message, .. } => {
                assert_eq!(*row, 2);
                assert!(message.contains("smirk"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "video_id,frames_dir,landmarks_path,label,fps\na,f,l,posed,50\na,g,m,posed,50\n",
        );
        assert!(matches!(load_manifest(&p), Err(Error::DuplicateVideo(id)) if id == "a"));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_manifest("/nonexistent/manifest.csv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn bad_fps_and_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "video_id,frames,landmarks,label,fps\n");
        assert!(matches!(load_manifest(&p), Err(Error::MalformedRow { row: 0, .. })));
        let p = write(
            dir.path(),
            "video_id,frames_dir,landmarks_path,label,fps\na,f,l,posed,-3\n",
        );
        assert!(matches!(load_manifest(&p), Err(Error::MalformedRow { row: 1, .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.csv");
        let recs = vec![
            VideoRecord {
                video_id: "v0".into(),
                frames_dir: dir.path().join("videos/v0/frames"),
                landmarks_path: dir.path().join("videos/v0/landmarks.csv"),
                label: Some(Label::Posed),
                fps: 50.0,
            },
            VideoRecord {
                video_id: "v1".into(),
                frames_dir: dir.path().join("videos/v1/frames"),
                landmarks_path: dir.path().join("videos/v1/landmarks.csv"),
                label: None,
                fps: 29.97,
            },
        ];
        write_manifest(&p, &recs).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("v0,videos/v0/frames,videos/v0/landmarks.csv,posed,50\n"));
        assert_eq!(load_manifest(&p).unwrap(), recs);
    }
}
