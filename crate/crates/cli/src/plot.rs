/// Binary greyscale PGM of `rows` (first row on top), scaled to the maximum.
pub fn heat_map_pgm(rows: &[Vec<f64>]) -> Vec<u8> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    let max = rows.iter().flatten().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in rows {
        out.extend(row.iter().map(|&v| if max > 0.0 && v.is_finite() { (255.0 * v / max).round() as u8 } else { 0 }));
    }
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn header_and_scaling() {
        let img = super::heat_map_pgm(&[vec![0.0, 2.0], vec![1.0, f64::NAN]]);
        assert_eq!(&img[..11], b"P5\n2 2\n255\n");
        assert_eq!(&img[11..], &[0, 255, 128, 0]);
    }
}
