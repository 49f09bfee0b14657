use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes so rows stay short.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if !x.is_finite() || a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

/// Output directory plus the provenance line stamped on every artifact.
pub struct Artifacts {
    dir: PathBuf,
    command: &'static str,
    seed: u64,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &'static str, seed: u64) -> Result<Self, String> {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            seed,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, String> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        Ok(path)
    }

    /// CSV with a leading `# holonomic <command> seed=<seed>` comment line.
    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, String> {
        let mut buf = format!("# holonomic {} seed={}\n", self.command, self.seed).into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(header).map_err(|e| e.to_string())?;
            for row in rows {
                w.write_record(row).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
        }
        self.write(name, &buf)
    }

    /// Pretty JSON object with `command` and `seed` keys added; keys are sorted.
    pub fn json(&mut self, name: &str, body: Value) -> Result<PathBuf, String> {
        let mut obj = serde_json::Map::new();
        obj.insert("command".into(), Value::from(self.command));
        obj.insert("seed".into(), Value::from(self.seed));
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("result".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| e.to_string())?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf, String> {
        self.write(name, body.as_bytes())
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Column names `x_1..x_d, v_11..v_nd`.
pub fn point_header(d: usize, n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    for i in 1..=n {
        h.extend((1..=d).map(|j| format!("v_{i}{j}")));
    }
    h
}

pub fn point_row(p: &holonomic::geometry::PhasePoint) -> Vec<String> {
    let mut row = nums(p.x());
    for v in p.fibers() {
        row.extend(nums(v));
    }
    row
}
