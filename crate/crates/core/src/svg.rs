// SPDX-License-Identifier: Apache-2.0

//! SVG rendering of a result.

use std::fmt::Write as _;
use std::path::Path;

use crate::io::ResultFile;
use crate::model::Design;

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];
const PAD: f64 = 10.0;

pub fn tech_color(tech: usize) -> &'static str {
    PALETTE[tech % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders dies, blocks and inter-die nets. The y axis points up as in the layout.
pub fn render_svg(result: &ResultFile, design: &Design) -> String {
    let m = result.config.objective.die_margin;
    let (mut w, mut h) = (0.0f64, 0.0f64);
    for d in &result.dies {
        w = w.max(d.origin.0 + d.width + 2.0 * m);
        h = h.max(d.origin.1 + d.height + 2.0 * m);
    }
    let (vw, vh) = (w + 2.0 * PAD, h + 2.0 * PAD);
    let fy = |y: f64| PAD + h - y;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {vw:.3} {vh:.3}" width="{vw:.0}" height="{vh:.0}">"#
    );
    let font = (w.max(h) / 80.0).max(1.0);
    for d in &result.dies {
        let (dw, dh) = (d.width + 2.0 * m, d.height + 2.0 * m);
        let _ = writeln!(
            s,
            r#"<rect class="die" x="{:.3}" y="{:.3}" width="{dw:.3}" height="{dh:.3}" fill="none" stroke="black" stroke-dasharray="4 2"><title>{} ({})</title></rect>"#,
            PAD + d.origin.0,
            fy(d.origin.1 + dh),
            esc(&d.id),
            esc(&d.tech)
        );
    }
    let tech_ix = |id: &str| design.technologies.iter().position(|t| t.id == id).unwrap_or(0);
    for b in &result.blocks {
        let _ = writeln!(
            s,
            r#"<rect class="block" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}" fill-opacity="0.6" stroke="black"/>"#,
            PAD + b.x,
            fy(b.y + b.h),
            b.w,
            b.h,
            tech_color(tech_ix(&b.tech))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="{font:.2}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            PAD + b.x + b.w / 2.0,
            fy(b.y + b.h / 2.0),
            esc(&b.id)
        );
    }
    for net in &design.nets {
        let first = &result.blocks[net.pins[0]].die;
        if net.pins.iter().all(|&p| &result.blocks[p].die == first) {
            continue;
        }
        let pts: Vec<String> = net
            .pins
            .iter()
            .map(|&p| {
                let b = &result.blocks[p];
                format!("{:.3},{:.3}", PAD + b.x + b.w / 2.0, fy(b.y + b.h / 2.0))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="net" points="{}" fill="none" stroke="red" stroke-opacity="0.7"><title>{}</title></polyline>"#,
            pts.join(" "),
            esc(&net.id)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(result: &ResultFile, design: &Design, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_svg(result, design))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::simple_design;
    use crate::orchestrator::{run, Method, RunConfig};

    fn result(areas: &[f64], nets: &[&[usize]], dies: usize) -> (ResultFile, Design) {
        let d = simple_design(areas, nets, dies);
        let cfg = RunConfig::default();
        let sol = run(&d, Method::Sa, &cfg, 1).unwrap();
        (ResultFile::new(&d, &sol, &cfg), d)
    }

    #[test]
    fn one_block_one_die() {
        let (r, d) = result(&[100.0], &[], 1);
        let svg = render_svg(&r, &d);
        assert_eq!(svg.matches("class=\"die\"").count(), 1);
        assert_eq!(svg.matches("class=\"block\"").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn deterministic_and_colored_by_technology() {
        let (r, d) = result(&[100.0, 80.0, 60.0, 90.0], &[&[0, 1], &[2, 3], &[0, 3]], 2);
        let a = render_svg(&r, &d);
        assert_eq!(a, render_svg(&r, &d));
        assert!(a.contains(tech_color(0)));
        let inter = d.nets.iter().filter(|n| {
            let die = &r.blocks[n.pins[0]].die;
            n.pins.iter().any(|&p| &r.blocks[p].die != die)
        });
        assert_eq!(a.matches("<polyline").count(), inter.count());
    }
}
