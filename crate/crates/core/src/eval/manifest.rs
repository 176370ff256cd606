use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation scene. Paths in a manifest file are resolved relative to
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub key_image: PathBuf,
    pub key_mask: PathBuf,
    pub query_image: PathBuf,
    pub query_truth: PathBuf,
}

impl SceneRecord {
    fn validate(&self) -> Result<()> {
        if self.scene_id.trim().is_empty() {
            return Err(Error::Manifest("scene_id must not be empty".into()));
        }
        let paths = [&self.key_image, &self.key_mask, &self.query_image, &self.query_truth];
        let unique: HashSet<_> = paths.iter().collect();
        if unique.len() != paths.len() {
            return Err(Error::Manifest(format!(
                "scene '{}' reuses the same file for two roles",
                self.scene_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    scenes: Vec<SceneRecord>,
}

impl Manifest {
    pub fn new(scenes: Vec<SceneRecord>) -> Result<Self> {
        if scenes.is_empty() {
            return Err(Error::Manifest("manifest contains no scenes".into()));
        }
        let mut seen = HashSet::new();
        for s in &scenes {
            s.validate()?;
            if !seen.insert(s.scene_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate scene_id '{}'", s.scene_id)));
            }
        }
        Ok(Self { scenes })
    }

    /// Parses CSV with header `scene_id,key_image,key_mask,query_image,query_truth`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, base_dir: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut scenes = Vec::new();
        for (line, row) in rdr.deserialize::<SceneRecord>().enumerate() {
            let mut rec = row.map_err(|e| Error::Manifest(format!("record {}: {e}", line + 1)))?;
            for p in [
                &mut rec.key_image,
                &mut rec.key_mask,
                &mut rec.query_image,
                &mut rec.query_truth,
            ] {
                if p.is_relative() {
                    *p = base_dir.join(&*p);
                }
            }
            scenes.push(rec);
        }
        Self::new(scenes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_csv_reader(file, base)
    }

    /// Replaces every scene's key image and mask with one shared pair.
    pub fn with_shared_key(self, key_image: PathBuf, key_mask: PathBuf) -> Result<Self> {
        let scenes = self
            .scenes
            .into_iter()
            .map(|s| SceneRecord {
                key_image: key_image.clone(),
                key_mask: key_mask.clone(),
                ..s
            })
            .collect();
        Self::new(scenes)
    }

    pub fn scenes(&self) -> &[SceneRecord] {
        &self.scenes
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "scene_id,key_image,key_mask,query_image,query_truth\n";

    #[test]
    fn parses_and_resolves_relative_paths() {
        let csv = format!("{HEADER}s1, k.png, km.png, q.png, qt.png\ns2,/abs/k.png,km.png,q2.png,qt2.png\n");
        let m = Manifest::from_csv_reader(csv.as_bytes(), Path::new("/data")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.scenes()[0].key_image, PathBuf::from("/data/k.png"));
        assert_eq!(m.scenes()[1].key_image, PathBuf::from("/abs/k.png"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let csv = format!("{HEADER}a,k,km,q,qt\na,k,km,q2,qt2\n");
        let err = Manifest::from_csv_reader(csv.as_bytes(), Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("duplicate scene_id"));
    }

    #[test]
    fn empty_manifest_rejected() {
        assert!(Manifest::from_csv_reader(HEADER.as_bytes(), Path::new(".")).is_err());
    }

    #[test]
    fn reused_path_rejected() {
        let csv = format!("{HEADER}a,k,k,q,qt\n");
        assert!(Manifest::from_csv_reader(csv.as_bytes(), Path::new(".")).is_err());
    }

    #[test]
    fn missing_column_rejected() {
        let csv = "scene_id,key_image\na,k\n";
        assert!(matches!(
            Manifest::from_csv_reader(csv.as_bytes(), Path::new(".")),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn shared_key_overrides() {
        let csv = format!("{HEADER}a,k1,km1,q1,t1\nb,k2,km2,q2,t2\n");
        let m = Manifest::from_csv_reader(csv.as_bytes(), Path::new("/d"))
            .unwrap()
            .with_shared_key("/s/key.png".into(), "/s/mask.png".into())
            .unwrap();
        assert!(m.scenes().iter().all(|s| s.key_image == Path::new("/s/key.png")));
        assert!(m.scenes().iter().all(|s| s.key_mask == Path::new("/s/mask.png")));
    }
}
