//! 8-D per-pixel feature vectors `[R, G, B, L, a, b, x, y]`, every component scaled to `[0, 1]`.

use crate::imaging::Frame;

pub const FEATURE_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
}

/// Feature of the pixel at `(x, y)`.
pub fn pixel_feature(frame: &Frame, x: usize, y: usize) -> FeatureVector {
    let [r, g, b] = frame.rgb_at(x, y);
    let [l, a, bb] = frame.lab_at(x, y);
    let nx = if frame.width() > 1 {
        x as f64 / (frame.width() - 1) as f64
    } else {
        0.0
    };
    let ny = if frame.height() > 1 {
        y as f64 / (frame.height() - 1) as f64
    } else {
        0.0
    };
    FeatureVector([
        r,
        g,
        b,
        (l / 100.0).clamp(0.0, 1.0),
        ((a + 128.0) / 255.0).clamp(0.0, 1.0),
        ((bb + 128.0) / 255.0).clamp(0.0, 1.0),
        nx,
        ny,
    ])
}

/// Row-major grid of per-pixel features.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    data: Vec<FeatureVector>,
}

impl FeatureMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> &FeatureVector {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &FeatureVector {
        &self.data[idx]
    }

    pub fn as_slice(&self) -> &[FeatureVector] {
        &self.data
    }
}

pub fn compute_feature_map(frame: &Frame) -> FeatureMap {
    let (w, h) = (frame.width(), frame.height());
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| pixel_feature(frame, x, y))
        .collect();
    FeatureMap {
        width: w,
        height: h,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::rgb_to_lab;
    use proptest::prelude::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn white_corner() {
        let f = Frame::filled(5, 4, 0, [1.0, 1.0, 1.0]).unwrap();
        let v = compute_feature_map(&f);
        let mid = 128.0 / 255.0;
        assert!(approx(v.at(0, 0).as_slice(), &[1.0, 1.0, 1.0, 1.0, mid, mid, 0.0, 0.0], 1e-4));
    }

    #[test]
    fn black_far_corner() {
        let f = Frame::filled(5, 4, 0, [0.0, 0.0, 0.0]).unwrap();
        let v = compute_feature_map(&f);
        let mid = 128.0 / 255.0;
        assert!(approx(v.at(4, 3).as_slice(), &[0.0, 0.0, 0.0, 0.0, mid, mid, 1.0, 1.0], 1e-12));
    }

    #[test]
    fn mid_gray_scaled_from_reference_lab() {
        // L* of sRGB 0.5 gray from scikit-image: 53.3889647
        let f = Frame::filled(3, 3, 0, [0.5, 0.5, 0.5]).unwrap();
        let v = pixel_feature(&f, 1, 1);
        let mid = 128.0 / 255.0;
        assert!(approx(v.as_slice(), &[0.5, 0.5, 0.5, 0.533_889_647, mid, mid, 0.5, 0.5], 1e-4));
        let lab = rgb_to_lab([0.5, 0.5, 0.5]);
        assert_eq!(v.0[3], lab[0] / 100.0);
    }

    #[test]
    fn single_pixel_frame_has_zero_coordinates() {
        let f = Frame::filled(1, 1, 0, [0.2, 0.4, 0.6]).unwrap();
        let v = pixel_feature(&f, 0, 0);
        assert_eq!(v.0[6], 0.0);
        assert_eq!(v.0[7], 0.0);
    }

    proptest! {
        #[test]
        fn components_in_unit_range(pixels in proptest::collection::vec(proptest::array::uniform3(0.0f64..=1.0), 12)) {
            let f = Frame::from_rgb(4, 3, 0, pixels).unwrap();
            for v in compute_feature_map(&f).as_slice() {
                prop_assert!(v.0.iter().all(|c| (0.0..=1.0).contains(c)));
            }
        }

        #[test]
        fn pure_in_color_and_position(c in proptest::array::uniform3(0.0f64..=1.0)) {
            let a = Frame::filled(4, 4, 0, c).unwrap();
            let mut px = vec![[0.3, 0.1, 0.9]; 16];
            px[5] = c;
            let b = Frame::from_rgb(4, 4, 1, px).unwrap();
            prop_assert_eq!(pixel_feature(&a, 1, 1), pixel_feature(&b, 1, 1));
        }
    }
}
