//! Minimal static SVG line plots for study outputs. No display server is
//! involved; the files are rendered directly from the summary rows.

use qaoa_transfer::pipeline::SizeSummary;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
    error: Option<Vec<f64>>,
}

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn render(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for (i, p) in s.points.iter().enumerate() {
            let e = s.error.as_ref().map(|e| e[i]).unwrap_or(0.0);
            ys.push(p.1 - e);
            ys.push(p.1 + e);
        }
    }
    let (x_min, x_max) = bounds(&xs, 0.5);
    let (y_min, y_max) = bounds(&ys, 0.0);
    let axes = Axes {
        x_min,
        x_max,
        y_min,
        y_max,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{title}</text>\n",
        WIDTH / 2.0
    ));

    // Frame and ticks.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));
    for i in 0..=4 {
        let vy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let py = axes.y(vy);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{MARGIN_L}\" y2=\"{py}\" stroke=\"black\"/>\n",
            MARGIN_L - 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            MARGIN_L - 9.0,
            py + 4.0,
            format_tick(vy)
        ));
        let vx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let px = axes.x(vx);
        svg.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            HEIGHT - MARGIN_B + 20.0,
            format_tick(vx)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{x_label}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 18 {})\">{y_label}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    for (si, s) in series.iter().enumerate() {
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", axes.x(x), axes.y(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            path.join(" "),
            s.color
        ));
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let (px, py) = (axes.x(x), axes.y(y));
            if let Some(err) = &s.error {
                if err[i] > 0.0 {
                    let (top, bottom) = (axes.y(y + err[i]), axes.y(y - err[i]));
                    svg.push_str(&format!(
                        "<line x1=\"{px}\" y1=\"{top:.2}\" x2=\"{px}\" y2=\"{bottom:.2}\" \
                         stroke=\"{}\"/>\n",
                        s.color
                    ));
                    for cap in [top, bottom] {
                        svg.push_str(&format!(
                            "<line x1=\"{}\" y1=\"{cap:.2}\" x2=\"{}\" y2=\"{cap:.2}\" \
                             stroke=\"{}\"/>\n",
                            px - 4.0,
                            px + 4.0,
                            s.color
                        ));
                    }
                }
            }
            svg.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3.5\" fill=\"{}\"/>\n",
                s.color
            ));
        }
        let ly = MARGIN_T + 16.0 + 18.0 * si as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            MARGIN_L + 12.0,
            MARGIN_L + 36.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            MARGIN_L + 42.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64], pad_abs: f64) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((max - min) * 0.08).max(1e-12).max(pad_abs * 0.0);
    let (lo, hi) = (min - pad - pad_abs, max + pad + pad_abs);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Approximation ratios vs size with standard-deviation error bars.
pub fn accuracy_svg(family: &str, rows: &[SizeSummary]) -> String {
    let x: Vec<f64> = rows.iter().map(|s| s.n_a as f64).collect();
    let series = [
        Series {
            label: "r_n (no optimization)",
            color: "#2a9d3f",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_r_n)).collect(),
            error: Some(rows.iter().map(|s| s.std_r_n).collect()),
        },
        Series {
            label: "r_s (targeted single layer)",
            color: "#1f5fbf",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_r_s)).collect(),
            error: Some(rows.iter().map(|s| s.std_r_s).collect()),
        },
        Series {
            label: "r_f (full optimization)",
            color: "#c3342b",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_r_f)).collect(),
            error: Some(rows.iter().map(|s| s.std_r_f).collect()),
        },
    ];
    render(
        &format!("{family}: approximation ratio"),
        "acceptor size n_a",
        "approximation ratio r",
        &series,
    )
}

/// Optimization wall time vs size.
pub fn time_svg(family: &str, rows: &[SizeSummary]) -> String {
    let x: Vec<f64> = rows.iter().map(|s| s.n_a as f64).collect();
    let series = [
        Series {
            label: "tau_s (single layer)",
            color: "#1f5fbf",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_tau_s)).collect(),
            error: None,
        },
        Series {
            label: "tau_f (full)",
            color: "#c3342b",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_tau_f)).collect(),
            error: None,
        },
    ];
    render(
        &format!("{family}: optimization time"),
        "acceptor size n_a",
        "wall time (s)",
        &series,
    )
}

/// Efficiency (ratio improvement per second) vs size.
pub fn efficiency_svg(family: &str, rows: &[SizeSummary]) -> String {
    let x: Vec<f64> = rows.iter().map(|s| s.n_a as f64).collect();
    let series = [
        Series {
            label: "eps_s (single layer)",
            color: "#1f5fbf",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_eps_s)).collect(),
            error: None,
        },
        Series {
            label: "eps_f (full)",
            color: "#c3342b",
            points: x.iter().zip(rows).map(|(&x, s)| (x, s.mean_eps_f)).collect(),
            error: None,
        },
    ];
    render(
        &format!("{family}: efficiency"),
        "acceptor size n_a",
        "efficiency (1/s)",
        &series,
    )
}
