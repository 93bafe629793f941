//! Forward kinematics of a planar serial chain moving in the x–z plane.
//!
//! Joint angles are relative. The absolute angle of link `i` is the sum of
//! joints `0..=i`, and zero means the link hangs straight down (−z).

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArm {
    lengths: Vec<f64>,
    base: [f64; 3],
}

impl PlanarArm {
    pub fn new(lengths: Vec<f64>, base: [f64; 3]) -> Self {
        Self { lengths, base }
    }

    /// Arm hung from a base at height `sum(lengths)`, so the resting tip sits at z = 0.
    pub fn hanging(lengths: Vec<f64>) -> Self {
        let h = lengths.iter().sum();
        Self::new(lengths, [0.0, 0.0, h])
    }

    pub fn n_links(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn base(&self) -> [f64; 3] {
        self.base
    }

    pub fn absolute_angles(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// World positions of every link endpoint.
    pub fn endpoints(&self, q: &[f64]) -> Vec<[f64; 3]> {
        let mut p = self.base;
        self.absolute_angles(q)
            .iter()
            .zip(&self.lengths)
            .map(|(&th, &l)| {
                p[0] += l * th.sin();
                p[2] -= l * th.cos();
                p
            })
            .collect()
    }

    /// World linear velocities of every link endpoint.
    pub fn endpoint_velocities(&self, q: &[f64], qdot: &[f64]) -> Vec<[f64; 3]> {
        let th = self.absolute_angles(q);
        let thdot = self.absolute_angles(qdot);
        let mut v = [0.0; 3];
        th.iter()
            .zip(&thdot)
            .zip(&self.lengths)
            .map(|((&a, &w), &l)| {
                v[0] += l * w * a.cos();
                v[2] += l * w * a.sin();
                v
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanging_rest_pose() {
        let arm = PlanarArm::hanging(vec![0.3, 0.2]);
        let p = arm.endpoints(&[0.0, 0.0]);
        assert!((p[0][2] - 0.2).abs() < 1e-15);
        assert!(p[1][2].abs() < 1e-15);
    }

    #[test]
    fn horizontal_link() {
        let arm = PlanarArm::new(vec![1.0], [0.0; 3]);
        let p = arm.endpoints(&[std::f64::consts::FRAC_PI_2]);
        assert!((p[0][0] - 1.0).abs() < 1e-15 && p[0][2].abs() < 1e-15);
    }

    #[test]
    fn velocities_match_finite_difference() {
        let arm = PlanarArm::hanging(vec![0.4, 0.3, 0.2]);
        let q = [0.3, -0.7, 1.1];
        let qd = [1.5, 0.4, -2.0];
        let h = 1e-6;
        let qp: Vec<f64> = q.iter().zip(&qd).map(|(a, b)| a + h * b).collect();
        let qm: Vec<f64> = q.iter().zip(&qd).map(|(a, b)| a - h * b).collect();
        let (pp, pm) = (arm.endpoints(&qp), arm.endpoints(&qm));
        let v = arm.endpoint_velocities(&q, &qd);
        for i in 0..3 {
            for k in 0..3 {
                let fd = (pp[i][k] - pm[i][k]) / (2.0 * h);
                assert!((fd - v[i][k]).abs() < 1e-8);
            }
        }
    }
}
