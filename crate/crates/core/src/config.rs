//! Settings shared by all commands. Command-line flags win over environment
//! variables, which win over the `key = value` config file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kv;

pub const ENV_CONFIG: &str = "EXPLKIT_CONFIG";
pub const ENV_DATA_DIR: &str = "EXPLKIT_DATA_DIR";
pub const ENV_RESULTS_DIR: &str = "EXPLKIT_RESULTS_DIR";
pub const ENV_BACKEND_URL: &str = "EXPLKIT_BACKEND_URL";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliConfig {
    pub data_dir: Option<PathBuf>,
    pub results_dir: PathBuf,
    /// Without it only mock backends can be selected.
    pub backend_url: Option<String>,
    pub seed: u64,
    pub log_level: String,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            data_dir: None,
            results_dir: PathBuf::from("results"),
            backend_url: None,
            seed: 0,
            log_level: "warn".into(),
        }
    }
}

/// Values read from a config file; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub results_dir: Option<PathBuf>,
    pub backend_url: Option<String>,
    pub seed: Option<u64>,
    pub log_level: Option<String>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let entries = kv::parse(text).map_err(|m| Error::format(origin, m))?;
        let mut cfg = FileConfig::default();
        for (key, value) in entries {
            match key.as_str() {
                "data_dir" => cfg.data_dir = Some(value.into()),
                "results_dir" => cfg.results_dir = Some(value.into()),
                "backend_url" => cfg.backend_url = Some(value),
                "seed" => {
                    cfg.seed = Some(value.parse().map_err(|_| {
                        Error::format(origin, format!("seed must be an integer, got `{value}`"))
                    })?)
                }
                "log_level" => cfg.log_level = Some(value),
                other => return Err(Error::format(origin, format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FileConfig::parse(&text, path)
    }
}

impl CliConfig {
    /// Fills unset command-line values from `file`, then defaults.
    pub fn resolve(
        data_dir: Option<PathBuf>,
        results_dir: Option<PathBuf>,
        backend_url: Option<String>,
        seed: Option<u64>,
        log_level: Option<String>,
        file: FileConfig,
    ) -> Self {
        let d = CliConfig::default();
        CliConfig {
            data_dir: data_dir.or(file.data_dir),
            results_dir: results_dir.or(file.results_dir).unwrap_or(d.results_dir),
            backend_url: backend_url
                .or(file.backend_url)
                .filter(|u| !u.trim().is_empty()),
            seed: seed.or(file.seed).unwrap_or(d.seed),
            log_level: log_level.or(file.log_level).unwrap_or(d.log_level),
        }
    }

    /// Relative input paths that do not exist as given are looked up under
    /// the data directory.
    pub fn input_path(&self, path: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_gaps() {
        let file = FileConfig::parse(
            "# comment\ndata_dir = /data\nseed = 7\nbackend_url = http://x:1\n",
            Path::new("c.conf"),
        )
        .unwrap();
        let cfg = CliConfig::resolve(None, Some("out".into()), None, Some(3), None, file);
        assert_eq!(cfg.data_dir, Some(PathBuf::from("/data")));
        assert_eq!(cfg.results_dir, PathBuf::from("out"));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.backend_url.as_deref(), Some("http://x:1"));
        assert_eq!(cfg.log_level, "warn");
    }

    #[test]
    fn bad_files() {
        assert!(FileConfig::parse("colour = red", Path::new("c")).is_err());
        assert!(FileConfig::parse("seed = many", Path::new("c")).is_err());
        assert!(FileConfig::parse("just words", Path::new("c")).is_err());
    }

    #[test]
    fn input_paths_fall_back_to_data_dir() {
        let cfg = CliConfig {
            data_dir: Some("/data".into()),
            ..Default::default()
        };
        assert_eq!(
            cfg.input_path(Path::new("nope/x.jsonl")),
            PathBuf::from("/data/nope/x.jsonl")
        );
        assert_eq!(
            cfg.input_path(Path::new("/abs.jsonl")),
            PathBuf::from("/abs.jsonl")
        );
    }
}
