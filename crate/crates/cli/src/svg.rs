//! Plain-text SVG line charts. Output depends only on the data, so equal
//! inputs give byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Half-width of the shaded band around `ys`.
    pub band: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            series: Vec::new(),
        }
    }

    /// Regret-vs-time chart with the usual axis labels.
    pub fn regret(title: &str) -> Self {
        Self::new(title, "t", "cumulative regret")
    }

    fn points<'a>(&'a self, s: &'a Series) -> impl Iterator<Item = (usize, f64, f64)> + 'a {
        s.xs.iter()
            .zip(&s.ys)
            .enumerate()
            .filter(move |(_, (x, y))| x.is_finite() && y.is_finite() && (!self.log_x || **x > 0.0))
            .map(|(i, (x, y))| (i, *x, *y))
    }

    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (i, x, y) in self.points(s) {
                let w = s.band.as_ref().and_then(|b| b.get(i)).copied().filter(|w| w.is_finite()).unwrap_or(0.0);
                x0 = x0.min(self.tx(x));
                x1 = x1.max(self.tx(x));
                y0 = y0.min(y - w);
                y1 = y1.max(y + w);
            }
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        y0 = y0.min(0.0);
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (self.tx(x) - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        // Axes and ticks.
        let _ = writeln!(
            w,
            r#"<path d="M{LEFT:.2},{TOP:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
            TOP + ph,
            LEFT + pw
        );
        for i in 0..=TICKS {
            let f = i as f64 / TICKS as f64;
            let xv = x0 + f * (x1 - x0);
            let label = if self.log_x { 10f64.powf(xv) } else { xv };
            let sx = LEFT + f * pw;
            let _ = writeln!(
                w,
                r#"<line x1="{sx:.2}" y1="{:.2}" x2="{sx:.2}" y2="{:.2}" stroke="black"/><text x="{sx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick(label)
            );
            let yv = y0 + f * (y1 - y0);
            let sy = TOP + ph - f * ph;
            let _ = writeln!(
                w,
                r#"<line x1="{:.2}" y1="{sy:.2}" x2="{LEFT:.2}" y2="{sy:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                sy + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            w,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(usize, f64, f64)> = self.points(s).collect();
            if let Some(band) = &s.band {
                let upper: Vec<String> = pts
                    .iter()
                    .map(|(i, x, y)| format!("{:.2},{:.2}", px(*x), py(y + band.get(*i).copied().unwrap_or(0.0))))
                    .collect();
                let lower: Vec<String> = pts
                    .iter()
                    .rev()
                    .map(|(i, x, y)| format!("{:.2},{:.2}", px(*x), py(y - band.get(*i).copied().unwrap_or(0.0))))
                    .collect();
                if !upper.is_empty() {
                    let _ = writeln!(
                        w,
                        r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                        upper.join(" "),
                        lower.join(" ")
                    );
                }
            }
            let line: Vec<String> = pts.iter().map(|(_, x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                line.join(" ")
            );
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 15.0;
            let _ = writeln!(
                w,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
