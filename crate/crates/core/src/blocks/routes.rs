/// Four pixel orderings of a `P x P` patch and their inverses.
///
/// Route 0 is the row-major raster, route 1 its reversal, route 2 the
/// column-major raster and route 3 its reversal. `forward[i][j]` is the
/// grid index visited at step `j`; `inverse[i][g]` is the step at which
/// grid index `g` is visited.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteSet {
    pub size: usize,
    pub forward: [Vec<usize>; 4],
    pub inverse: [Vec<usize>; 4],
}

pub fn generate_cross_routes(size: usize) -> RouteSet {
    let len = size * size;
    let row_major: Vec<usize> = (0..len).collect();
    let col_major: Vec<usize> = (0..len).map(|j| (j % size) * size + j / size).collect();
    let reversed = |v: &[usize]| v.iter().rev().copied().collect::<Vec<_>>();
    let forward = [
        row_major.clone(),
        reversed(&row_major),
        col_major.clone(),
        reversed(&col_major),
    ];
    let inverse = forward.clone().map(|route| {
        let mut inv = vec![0; len];
        for (j, &g) in route.iter().enumerate() {
            inv[g] = j;
        }
        inv
    });
    RouteSet {
        size,
        forward,
        inverse,
    }
}

impl RouteSet {
    /// Reorders pixel-major `values` (`width` scalars per pixel) into the
    /// visiting order of `route`.
    pub fn permute<T: Copy>(&self, route: usize, values: &[T], width: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(values.len());
        for &g in &self.forward[route] {
            out.extend_from_slice(&values[g * width..(g + 1) * width]);
        }
        out
    }

    /// Inverse of [`RouteSet::permute`].
    pub fn unpermute<T: Copy>(&self, route: usize, values: &[T], width: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(values.len());
        for &j in &self.inverse[route] {
            out.extend_from_slice(&values[j * width..(j + 1) * width]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_orders() {
        let r = generate_cross_routes(2);
        assert_eq!(r.forward[0], vec![0, 1, 2, 3]);
        assert_eq!(r.forward[1], vec![3, 2, 1, 0]);
        // (0,0), (1,0), (0,1), (1,1)
        assert_eq!(r.forward[2], vec![0, 2, 1, 3]);
        assert_eq!(r.forward[3], vec![3, 1, 2, 0]);
    }

    #[test]
    fn unit_patch_routes_are_identity() {
        let r = generate_cross_routes(1);
        for i in 0..4 {
            assert_eq!(r.forward[i], vec![0]);
            assert_eq!(r.inverse[i], vec![0]);
        }
    }

    proptest! {
        #[test]
        fn route_composed_with_inverse_is_identity(size in 1usize..12) {
            let r = generate_cross_routes(size);
            for i in 0..4 {
                for g in 0..size * size {
                    prop_assert_eq!(r.forward[i][r.inverse[i][g]], g);
                    prop_assert_eq!(r.inverse[i][r.forward[i][g]], g);
                }
            }
        }

        #[test]
        fn permute_round_trip_is_exact(
            size in 1usize..8, width in 1usize..4, seed in any::<u64>()
        ) {
            let r = generate_cross_routes(size);
            let values: Vec<f64> = (0..size * size * width)
                .map(|i| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 * 0.37)
                .collect();
            for i in 0..4 {
                let back = r.unpermute(i, &r.permute(i, &values, width), width);
                prop_assert_eq!(&back, &values);
            }
        }
    }
}
