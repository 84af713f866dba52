use std::io::Write;

use serde_json::{json, Map, Value};

/// Stderr event sink: JSON lines with `--json`, terse text otherwise.
pub struct Log<'a> {
    json: bool,
    verbose: u8,
    sink: &'a mut dyn Write,
}

impl<'a> Log<'a> {
    pub fn new(json: bool, verbose: u8, sink: &'a mut dyn Write) -> Self {
        Log {
            json,
            verbose,
            sink,
        }
    }

    pub fn event(&mut self, event: &str, fields: Value) {
        if self.json {
            let mut obj = Map::new();
            obj.insert("event".into(), json!(event));
            if let Value::Object(f) = fields {
                obj.extend(f);
            }
            let _ = writeln!(self.sink, "{}", Value::Object(obj));
        } else if self.verbose > 0 {
            let _ = writeln!(self.sink, "{event}: {fields}");
        }
    }

    /// Like [`Log::event`] but printed regardless of verbosity.
    pub fn event_always(&mut self, event: &str, fields: Value) {
        if self.json {
            self.event(event, fields);
        } else {
            let _ = writeln!(self.sink, "{event}: {fields}");
        }
    }

    pub fn error(&mut self, code: i32, message: &str) {
        if self.json {
            let _ = writeln!(
                self.sink,
                "{}",
                json!({"event": "error", "code": code, "message": message})
            );
        } else {
            let _ = writeln!(self.sink, "error: {message}");
        }
    }
}
