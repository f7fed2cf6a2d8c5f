//! One-pixel polylines rasterized with Bresenham's algorithm.

use sparseflow::Frame64;

/// Draws the path `points` into `frame` at full intensity. Returns whether any
/// pixel was touched.
pub fn draw_polyline(frame: &mut Frame64, points: &[(f64, f64)]) -> bool {
    let pixel = |p: &(f64, f64)| (p.0.round() as i64, p.1.round() as i64);
    let mut touched = false;
    match points {
        [] => {}
        [only] => {
            let (x, y) = pixel(only);
            touched |= plot(frame, x, y);
        }
        _ => {
            for w in points.windows(2) {
                touched |= draw_line(frame, pixel(&w[0]), pixel(&w[1]));
            }
        }
    }
    touched
}

fn draw_line(frame: &mut Frame64, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64)) -> bool {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut touched = false;
    loop {
        touched |= plot(frame, x0, y0);
        if x0 == x1 && y0 == y1 {
            return touched;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn plot(frame: &mut Frame64, x: i64, y: i64) -> bool {
    if x < 0 || y < 0 || x as usize >= frame.width() || y as usize >= frame.height() {
        return false;
    }
    frame.set(x as usize, y as usize, 1.0);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(frame: &Frame64) -> Vec<(usize, usize)> {
        let mut out = vec![];
        for y in 0..frame.height() {
            for x in 0..frame.width() {
                if frame.get(x, y) == 1.0 {
                    out.push((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn diagonal_and_single_point() {
        let mut f = Frame64::constant(5, 5, 0.0).unwrap();
        assert!(draw_polyline(&mut f, &[(0.0, 0.0), (3.2, 2.9)]));
        assert_eq!(lit(&f), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);

        let mut g = Frame64::constant(5, 5, 0.0).unwrap();
        draw_polyline(&mut g, &[(4.4, 1.0)]);
        assert_eq!(lit(&g), vec![(4, 1)]);
    }

    #[test]
    fn lines_are_one_pixel_wide_and_connected() {
        let mut f = Frame64::constant(12, 6, 0.0).unwrap();
        draw_polyline(&mut f, &[(1.0, 1.0), (10.0, 4.0)]);
        let pts = lit(&f);
        // x-major line: one pixel per column
        assert_eq!(pts.len(), 10);
        let mut xs: Vec<usize> = pts.iter().map(|p| p.0).collect();
        xs.sort_unstable();
        assert_eq!(xs, (1..=10).collect::<Vec<_>>());

        draw_polyline(&mut f, &[(10.0, 4.0), (2.0, 5.0)]);
        let pts = lit(&f);
        assert!(pts.contains(&(2, 5)));
        for &(x, y) in &pts {
            let neighbours = pts.iter().filter(|&&(a, b)| (a, b) != (x, y) && a.abs_diff(x) <= 1 && b.abs_diff(y) <= 1).count();
            assert!(neighbours >= 1, "isolated pixel ({x}, {y})");
        }
    }

    #[test]
    fn clipped_outside() {
        let mut f = Frame64::constant(4, 4, 0.0).unwrap();
        assert!(!draw_polyline(&mut f, &[(-3.0, -3.0), (-1.0, 9.0)]));
        assert!(lit(&f).is_empty());
    }
}
