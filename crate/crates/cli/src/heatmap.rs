//! Deterministic SVG maps of per-subfault values.
//!
//! Each subfault is a square of side `√area` centred on its `(x, y)` centroid,
//! filled on a linear three-stop colour ramp between the field minimum and
//! maximum. Undefined values (NaN) are drawn grey. Stations are triangles.
//! Numbers are printed with fixed precision so output bytes depend only on
//! the inputs.

use std::fmt::Write as _;

use slipinv::{FaultMesh, StationSet};

use crate::error::{CliError, CliResult};

const PLOT_PX: f64 = 480.0;
const MARGIN_PX: f64 = 40.0;
const LEGEND_PX: f64 = 90.0;
const UNDEFINED_FILL: &str = "#bdbdbd";
const RAMP: [(f64, [f64; 3]); 3] = [
    (0.0, [49.0, 54.0, 149.0]),
    (0.5, [255.0, 255.0, 191.0]),
    (1.0, [165.0, 0.0, 38.0]),
];

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let k = if t <= RAMP[1].0 { 0 } else { 1 };
    let (t0, c0) = RAMP[k];
    let (t1, c1) = RAMP[k + 1];
    let u = (t - t0) / (t1 - t0);
    let ch = |i: usize| (c0[i] + u * (c1[i] - c0[i])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

/// Renders `values` (one per subfault) as an SVG document.
pub fn render_heatmap(
    title: &str,
    values: &[f64],
    mesh: &FaultMesh,
    stations: Option<&StationSet>,
) -> CliResult<String> {
    if values.len() != mesh.len() {
        return Err(CliError::Usage(format!(
            "heatmap needs {} values, got {}",
            mesh.len(),
            values.len()
        )));
    }
    let half: Vec<f64> = mesh.areas().iter().map(|a| 0.5 * a.sqrt()).collect();
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (c, h) in mesh.centroids().iter().zip(&half) {
        xs.extend([c[0] - h, c[0] + h]);
        ys.extend([c[1] - h, c[1] + h]);
    }
    if let Some(st) = stations {
        for s in st.coordinates() {
            xs.push(s[0]);
            ys.push(s[1]);
        }
    }
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            })
    };
    let (x0, x1) = fold(&xs);
    let (y0, y1) = fold(&ys);
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = PLOT_PX / span;
    let px = |x: f64| MARGIN_PX + (x - x0) * scale;
    // north up
    let py = |y: f64| MARGIN_PX + (y1 - y) * scale;

    let defined: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (vmin, vmax) = if defined.is_empty() {
        (0.0, 0.0)
    } else {
        fold(&defined)
    };
    let t_of = |v: f64| {
        if vmax > vmin {
            (v - vmin) / (vmax - vmin)
        } else {
            0.5
        }
    };

    let width = 2.0 * MARGIN_PX + PLOT_PX + LEGEND_PX;
    let height = 2.0 * MARGIN_PX + PLOT_PX;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN_PX,
        MARGIN_PX * 0.6,
        escape(title)
    );
    for (i, c) in mesh.centroids().iter().enumerate() {
        let side = 2.0 * half[i] * scale;
        let fill = if values[i].is_finite() {
            ramp(t_of(values[i]))
        } else {
            UNDEFINED_FILL.to_string()
        };
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="black" stroke-width="0.5"><title>{}</title></rect>"#,
            px(c[0] - half[i]),
            py(c[1] + half[i]),
            side,
            side,
            escape(&mesh.ids()[i])
        );
    }
    if let Some(st) = stations {
        for (label, c) in st.labels().iter().zip(st.coordinates()) {
            let (cx, cy) = (px(c[0]), py(c[1]));
            let _ = writeln!(
                s,
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="black"><title>{}</title></polygon>"#,
                cx,
                cy - 6.0,
                cx - 5.0,
                cy + 4.0,
                cx + 5.0,
                cy + 4.0,
                escape(label)
            );
        }
    }
    let lx = MARGIN_PX + PLOT_PX + 30.0;
    let steps = 20;
    let bar_h = PLOT_PX / steps as f64;
    for k in 0..steps {
        let t = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="16.00" height="{:.2}" fill="{}"/>"#,
            lx,
            MARGIN_PX + k as f64 * bar_h,
            bar_h,
            ramp(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">max {:.4e}</text>"#,
        lx - 10.0,
        MARGIN_PX - 6.0,
        vmax
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">min {:.4e}</text>"#,
        lx - 10.0,
        MARGIN_PX + PLOT_PX + 14.0,
        vmin
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> FaultMesh {
        FaultMesh::from_parts(
            vec![[0.0, 0.0, -5e3], [1e3, 0.0, -5e3]],
            vec![1e6, 1e6],
            vec![5e3, 5e3],
        )
        .unwrap()
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#313695");
        assert_eq!(ramp(0.5), "#ffffbf");
        assert_eq!(ramp(1.0), "#a50026");
        assert_eq!(ramp(2.0), ramp(1.0));
    }

    #[test]
    fn constant_field_is_single_colour() {
        let svg = render_heatmap("c", &[0.2, 0.2], &two(), None).unwrap();
        assert_eq!(svg.matches(r##"fill="#ffffbf" stroke"##).count(), 2);
        assert!(svg.contains("max 2.0000e-1") && svg.contains("min 2.0000e-1"));
    }

    #[test]
    fn deterministic_and_checked() {
        let a = render_heatmap("t", &[0.1, f64::NAN], &two(), None).unwrap();
        assert_eq!(
            a,
            render_heatmap("t", &[0.1, f64::NAN], &two(), None).unwrap()
        );
        assert!(a.contains(UNDEFINED_FILL));
        assert!(render_heatmap("t", &[0.1], &two(), None).is_err());
        assert!(render_heatmap("<&>", &[0.0, 1.0], &two(), None)
            .unwrap()
            .contains("&lt;&amp;&gt;"));
    }
}
