//! JSON report assembly.
//!
//! Reports are printed by hand rather than through a serializer so that
//! every number carries full precision (17 significant digits). JSON has
//! no literal for infinities, so they print as the strings "inf" and
//! "-inf", matching what the flag parsers accept on the way in.

use qlc_core::matcore::ExtReal;

fn render_num(x: f64) -> String {
    if x == f64::INFINITY {
        "\"inf\"".into()
    } else if x == f64::NEG_INFINITY {
        "\"-inf\"".into()
    } else if x.is_nan() {
        "null".into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Default)]
pub struct Report {
    fields: Vec<(&'static str, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn num(mut self, key: &'static str, x: f64) -> Self {
        self.fields.push((key, render_num(x)));
        self
    }

    pub fn ext(self, key: &'static str, x: ExtReal) -> Self {
        self.num(key, x.as_f64())
    }

    pub fn str(mut self, key: &'static str, s: &str) -> Self {
        self.fields.push((key, format!("\"{s}\"")));
        self
    }

    pub fn obj(mut self, key: &'static str, inner: Report) -> Self {
        self.fields.push((key, inner.render(1)));
        self
    }

    fn render(&self, depth: usize) -> String {
        let pad = "  ".repeat(depth + 1);
        let close = "  ".repeat(depth);
        let body = self
            .fields
            .iter()
            .map(|(k, v)| format!("{pad}\"{k}\": {v}"))
            .collect::<Vec<_>>()
            .join(",\n");
        format!("{{\n{body}\n{close}}}")
    }

    pub fn print(self) {
        println!("{}", self.render(0));
    }
}
