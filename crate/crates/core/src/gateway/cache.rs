use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Hash of model id, temperature and the full message array.
pub fn cache_key(model_id: &str, temperature: f64, messages: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(temperature.to_bits().to_le_bytes());
    hasher.update(messages.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    model_id: String,
    response: String,
}

/// One JSON file per cached response. Access is serialised.
pub struct ResponseCache {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl ResponseCache {
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            lock: Mutex::new(()),
        })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> io::Result<Option<String>> {
        let _guard = self.lock.lock().expect("cache lock");
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let entry: Entry = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        // a file under this name with another key is a collision, not a hit
        Ok((entry.key == key).then_some(entry.response))
    }

    pub fn put(&self, key: &str, model_id: &str, response: &str) -> io::Result<()> {
        let _guard = self.lock.lock().expect("cache lock");
        let entry = Entry {
            key: key.to_owned(),
            model_id: model_id.to_owned(),
            response: response.to_owned(),
        };
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, serde_json::to_vec(&entry).map_err(io::Error::other)?)?;
        fs::rename(tmp, self.path(key))
    }
}
