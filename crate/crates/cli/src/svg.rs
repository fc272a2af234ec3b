//! Deterministic SVG charts. Coordinates are printed with two decimals so
//! identical inputs give byte-identical documents.

use std::fmt::Write;

use techprox_core::forecasting::HistogramRow;
use techprox_core::proximity::IndexKind;
use techprox_core::series::ProcessedSeries;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 300.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn kind_color(kind: IndexKind) -> &'static str {
    PALETTE[IndexKind::ALL.iter().position(|k| *k == kind).unwrap_or(0)]
}

fn n(x: f64) -> String {
    format!("{x:.2}")
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

struct Frame {
    pw: f64,
    ph: f64,
}

impl Frame {
    fn new() -> Self {
        Self { pw: WIDTH - LEFT - RIGHT, ph: HEIGHT - TOP - BOTTOM }
    }

    fn open(&self, doc: &mut String, title: &str) {
        let _ = writeln!(
            doc,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = WIDTH,
            h = HEIGHT
        );
        let _ = writeln!(doc, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            doc,
            r#"<defs><clipPath id="plot-area"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
            n(LEFT),
            n(TOP),
            n(self.pw),
            n(self.ph)
        );
        let _ = writeln!(doc, r#"<text x="{}" y="24" font-size="15">{}</text>"#, n(LEFT), escape(title));
        let _ = writeln!(
            doc,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            n(LEFT),
            n(TOP),
            n(self.pw),
            n(self.ph)
        );
    }

    fn y_axis(&self, doc: &mut String, max: f64, ticks: usize, label: &str) {
        for t in 0..=ticks {
            let v = max * t as f64 / ticks as f64;
            let y = TOP + self.ph * (1.0 - t as f64 / ticks as f64);
            let _ = writeln!(
                doc,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
                n(LEFT),
                n(LEFT + self.pw),
                n(LEFT - 6.0),
                n(y + 4.0),
                n(v),
                y = n(y)
            );
        }
        let _ = writeln!(
            doc,
            r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
            n(TOP + self.ph / 2.0),
            n(TOP + self.ph / 2.0),
            escape(label)
        );
    }

    fn legend_entry(&self, doc: &mut String, row: usize, color: &str, text: &str) {
        let x = LEFT + self.pw + 16.0;
        let y = TOP + 8.0 + 20.0 * row as f64;
        let _ = writeln!(
            doc,
            r#"<g class="legend"><rect x="{}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text></g>"#,
            n(x),
            n(y),
            n(x + 18.0),
            n(y + 10.0),
            escape(text)
        );
    }
}

/// Min-max transform of the filled values, applied to the fitted curve too.
fn scaler(values: &[f64]) -> impl Fn(f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    move |v| if span > 0.0 && span.is_finite() { (v - lo) / span } else { 0.0 }
}

/// One chart with a scatter layer per index (hollow markers for filled-in
/// months) and its fitted polynomial. Values are min-max scaled per index.
pub fn series_plot(title: &str, series: &[&ProcessedSeries]) -> String {
    let frame = Frame::new();
    let mut doc = String::new();
    frame.open(&mut doc, title);
    let len = series.iter().map(|s| s.filled.len()).max().unwrap_or(0);
    let x_of = |i: usize| LEFT + if len > 1 { frame.pw * i as f64 / (len - 1) as f64 } else { 0.0 };
    let y_of = |v: f64| TOP + frame.ph * (1.0 - v);

    frame.y_axis(&mut doc, 1.0, 4, "scaled index value");
    if let Some(first) = series.first() {
        let range = first.range;
        for i in 0..len {
            let m = range.month_at(i);
            if m.month == 1 && (m.year - range.start.year) % 2 == 0 {
                let x = n(x_of(i));
                let _ = writeln!(
                    doc,
                    r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"##,
                    n(TOP + frame.ph),
                    n(TOP + frame.ph + 5.0),
                    n(TOP + frame.ph + 18.0),
                    m.year
                );
            }
        }
    }
    let _ = writeln!(
        doc,
        r#"<text x="{}" y="{}" text-anchor="middle">year</text>"#,
        n(LEFT + frame.pw / 2.0),
        n(HEIGHT - 10.0)
    );

    for (row, s) in series.iter().enumerate() {
        let color = kind_color(s.kind);
        let scale = scaler(&s.filled);
        let _ = writeln!(doc, r#"<g class="series" data-kind="{}">"#, s.kind.name());
        if !s.fitted.is_empty() {
            let pts: Vec<String> =
                s.fitted.iter().enumerate().map(|(i, v)| format!("{},{}", n(x_of(i)), n(y_of(scale(*v))))).collect();
            let _ = writeln!(
                doc,
                r#"<polyline class="fit" points="{}" fill="none" stroke="{color}" stroke-width="1.5" clip-path="url(#plot-area)"/>"#,
                pts.join(" ")
            );
        }
        for (i, v) in s.filled.iter().enumerate() {
            let fill = if s.interpolated.get(i).copied().unwrap_or(false) { "none" } else { color };
            let _ = writeln!(
                doc,
                r#"<circle class="pt" cx="{}" cy="{}" r="2" fill="{fill}" stroke="{color}"/>"#,
                n(x_of(i)),
                n(y_of(scale(*v)))
            );
        }
        doc.push_str("</g>\n");
        let mut label = format!("{} (interpolation {:.1}%", s.kind.name(), 100.0 * s.interpolation_rate);
        if let Some(fit) = &s.fit {
            let _ = write!(label, ", degree {}", fit.degree);
        }
        if s.flags.excluded {
            label.push_str(", excluded");
        } else if s.flags.flat {
            label.push_str(", flat");
        }
        label.push(')');
        frame.legend_entry(&mut doc, row, color, &label);
    }
    doc.push_str("</svg>\n");
    doc
}

/// Grouped bars of fold-SMAPE counts per bucket, one colour per model.
pub fn histogram_plot(title: &str, rows: &[HistogramRow]) -> String {
    let frame = Frame::new();
    let mut doc = String::new();
    frame.open(&mut doc, title);

    let mut models: Vec<&str> = Vec::new();
    let mut buckets: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if !buckets.iter().any(|b| b.0 == r.bucket_lo) {
            buckets.push((r.bucket_lo, r.bucket_hi));
        }
    }
    buckets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max = rows.iter().map(|r| r.count).max().unwrap_or(0).max(1) as f64;
    frame.y_axis(&mut doc, max, 4, "fold count");

    let group = frame.pw / buckets.len().max(1) as f64;
    let bar = group / (models.len() + 1) as f64;
    let label_every = buckets.len().div_ceil(10).max(1);
    for (b, (lo, _)) in buckets.iter().enumerate() {
        if b % label_every == 0 {
            let _ = writeln!(
                doc,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                n(LEFT + group * b as f64),
                n(TOP + frame.ph + 18.0),
                lo
            );
        }
    }
    let _ = writeln!(
        doc,
        r#"<text x="{}" y="{}" text-anchor="middle">SMAPE</text>"#,
        n(LEFT + frame.pw / 2.0),
        n(HEIGHT - 10.0)
    );
    for (mi, model) in models.iter().enumerate() {
        let color = PALETTE[mi % PALETTE.len()];
        for r in rows.iter().filter(|r| r.model == *model) {
            let b = buckets.iter().position(|x| x.0 == r.bucket_lo).unwrap_or(0);
            let h = frame.ph * r.count as f64 / max;
            let _ = writeln!(
                doc,
                r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
                n(LEFT + group * b as f64 + bar * (mi as f64 + 0.5)),
                n(TOP + frame.ph - h),
                n(bar),
                n(h)
            );
        }
        frame.legend_entry(&mut doc, mi, color, model);
    }
    doc.push_str("</svg>\n");
    doc
}
