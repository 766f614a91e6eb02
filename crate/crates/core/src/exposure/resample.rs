use std::collections::HashSet;

use super::ExposureError;
use crate::geometry::Coord;

/// Default spacing between exposure samples, meters.
pub const DEFAULT_INTERVAL_M: f64 = 10.0;

/// Points every `interval` meters of arc length along `geometry`.
///
/// Samples sit at arc lengths `0, interval, 2*interval, ...`. The final
/// vertex is appended when it lies more than `interval / 100` beyond the
/// last regular sample. Exact duplicate positions are dropped, keeping the
/// first occurrence.
pub fn resample_route(geometry: &[Coord], interval: f64) -> Result<Vec<Coord>, ExposureError> {
    if !(interval > 0.0) || !interval.is_finite() {
        return Err(ExposureError::InvalidInterval(interval));
    }
    if !geometry.iter().all(Coord::is_finite) {
        return Err(ExposureError::DegenerateGeometry);
    }
    let total: f64 = geometry.windows(2).map(|w| w[0].distance(&w[1])).sum();
    if !(total > 0.0) {
        return Err(ExposureError::DegenerateGeometry);
    }

    let mut out: Vec<Coord> = Vec::with_capacity((total / interval) as usize + 2);
    let mut seen = HashSet::with_capacity(out.capacity());
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    let mut last_s = 0.0;
    let mut i = 0usize;
    loop {
        let s = i as f64 * interval;
        if s > total {
            break;
        }
        // Advance to the segment holding arc length s.
        while seg + 1 < geometry.len() - 1 {
            let len = geometry[seg].distance(&geometry[seg + 1]);
            if seg_start + len >= s {
                break;
            }
            seg_start += len;
            seg += 1;
        }
        let a = geometry[seg];
        let b = geometry[seg + 1];
        let len = a.distance(&b);
        let p = if len > 0.0 {
            let t = ((s - seg_start) / len).clamp(0.0, 1.0);
            Coord::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        } else {
            a
        };
        push_unique(&mut out, &mut seen, p);
        last_s = s;
        i += 1;
    }
    if total - last_s > interval / 100.0 {
        push_unique(
            &mut out,
            &mut seen,
            *geometry.last().expect("non-empty geometry"),
        );
    }
    Ok(out)
}

fn push_unique(out: &mut Vec<Coord>, seen: &mut HashSet<(u64, u64)>, p: Coord) {
    // `+ 0.0` folds -0.0 into 0.0 so equal positions hash equally.
    if seen.insert(((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())) {
        out.push(p);
    }
}
