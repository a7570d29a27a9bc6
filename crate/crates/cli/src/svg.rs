//! SVG rendering of a parameterized mesh layout: the unit circle, every
//! triangle edge, and folded faces filled in a highlight color. Output is
//! deterministic for fixed inputs.

use std::fmt::Write as _;

use sdmce_core::mesh::TriMesh;
use sdmce_core::unfolding::classify_folding;
use sdmce_core::util::P2;

#[derive(Debug, Clone)]
pub struct SvgOptions {
    pub size_px: u32,
    pub edge_color: &'static str,
    pub fold_color: &'static str,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            size_px: 800,
            edge_color: "#30343a",
            fold_color: "#d64545",
        }
    }
}

fn coord(x: f64) -> String {
    // Fixed precision keeps the output byte-stable.
    format!("{x:.6}")
}

/// Renders the layout. The y axis is mirrored so counter-clockwise in math
/// coordinates stays counter-clockwise on screen.
pub fn render_svg(mesh: &TriMesh, points: &[P2], options: &SvgOptions) -> String {
    let folding = classify_folding(mesh, points);
    let mut folded: Vec<usize> = folding
        .folded_interior_triangles
        .iter()
        .chain(&folding.folded_boundary_triangles_kind1)
        .chain(&folding.folded_boundary_triangles_kind2)
        .chain(&folding.folded_boundary_triangles_kind3)
        .copied()
        .collect();
    folded.sort_unstable();
    folded.dedup();

    let mut out = String::new();
    let size = options.size_px;
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="-1.1 -1.1 2.2 2.2">"#
    );
    let _ = writeln!(
        out,
        r##"<circle cx="0" cy="0" r="1" fill="none" stroke="#9aa0a6" stroke-width="0.006"/>"##
    );

    // Folded faces first so edges draw on top of the fill.
    for &fi in &folded {
        let [a, b, c] = mesh.faces()[fi];
        let _ = writeln!(
            out,
            r#"<polygon points="{},{} {},{} {},{}" fill="{}" fill-opacity="0.75"/>"#,
            coord(points[a][0]),
            coord(-points[a][1]),
            coord(points[b][0]),
            coord(-points[b][1]),
            coord(points[c][0]),
            coord(-points[c][1]),
            options.fold_color
        );
    }

    let mut path = String::new();
    for &[a, b, c] in mesh.faces() {
        let _ = write!(
            path,
            "M{},{} L{},{} L{},{} Z ",
            coord(points[a][0]),
            coord(-points[a][1]),
            coord(points[b][0]),
            coord(-points[b][1]),
            coord(points[c][0]),
            coord(-points[c][1]),
        );
    }
    let _ = writeln!(
        out,
        r#"<path d="{}" fill="none" stroke="{}" stroke-width="0.003"/>"#,
        path.trim_end(),
        options.edge_color
    );
    let _ = writeln!(out, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdmce_core::fixtures;

    #[test]
    fn fan_renders_circle_and_faces() {
        let mesh = fixtures::flat_fan(12);
        let points: Vec<P2> = mesh.vertices().iter().map(|v| [v[0], v[1]]).collect();
        let svg = render_svg(&mesh, &points, &SvgOptions::default());
        assert!(svg.contains("<circle"));
        assert_eq!(svg.matches(" Z").count(), 12);
        assert!(!svg.contains("<polygon"), "no folded faces expected");
    }

    #[test]
    fn folded_faces_are_highlighted() {
        let mesh = fixtures::flat_fan(6);
        let mut points: Vec<P2> = mesh.vertices().iter().map(|v| [v[0], v[1]]).collect();
        points.swap(1, 2);
        let svg = render_svg(&mesh, &points, &SvgOptions::default());
        assert!(svg.contains("<polygon"), "folded faces must be filled");
    }

    #[test]
    fn output_is_byte_identical_across_runs() {
        let mesh = fixtures::flat_disk(3);
        let points: Vec<P2> = mesh.vertices().iter().map(|v| [v[0], v[1]]).collect();
        let a = render_svg(&mesh, &points, &SvgOptions::default());
        let b = render_svg(&mesh, &points, &SvgOptions::default());
        assert_eq!(a, b);
    }
}
