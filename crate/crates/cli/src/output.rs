use serde_json::Value;

/// Fixed 12 decimals for ordinary magnitudes, 12 significant digits in
/// exponent form outside them.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) {
        format!("{v:.12}")
    } else {
        format!("{v:.11e}")
    }
}

/// Either `key=value` lines or one JSON object on stdout.
pub struct Report {
    json: bool,
    lines: Vec<String>,
    object: serde_json::Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, json: bool) -> Self {
        let mut object = serde_json::Map::new();
        object.insert("command".into(), Value::from(command));
        Self {
            json,
            lines: Vec::new(),
            object,
        }
    }

    pub fn real(&mut self, key: &str, v: f64) -> &mut Self {
        self.lines.push(format!("{key}={}", num(v)));
        self.object.insert(key.into(), Value::from(v));
        self
    }

    pub fn int(&mut self, key: &str, v: u64) -> &mut Self {
        self.lines.push(format!("{key}={v}"));
        self.object.insert(key.into(), Value::from(v));
        self
    }

    pub fn text(&mut self, key: &str, v: &str) -> &mut Self {
        self.lines.push(format!("{key}={v}"));
        self.object.insert(key.into(), Value::from(v));
        self
    }

    /// Adds a JSON field with its own text rendering.
    pub fn raw(&mut self, key: &str, value: Value, line: String) -> &mut Self {
        self.lines.push(line);
        self.object.insert(key.into(), value);
        self
    }

    pub fn render(&self) -> String {
        if self.json {
            let mut s = serde_json::to_string(&self.object).expect("serializable");
            s.push('\n');
            s
        } else {
            let mut s = self.lines.join("\n");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.000000000000");
        assert_eq!(num(0.0), "0.000000000000");
        assert_eq!(num(-0.25), "-0.250000000000");
        assert_eq!(num(1.5e-7), "1.50000000000e-7");
        assert_eq!(num(f64::NAN), "NaN");
    }
}
