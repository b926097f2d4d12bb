//! Lumped quasi-steady hydrodynamics: quadratic body drag and a flat-plate
//! normal force on the caudal fin. Water is still.

use crate::geom::Vec2;
use crate::params::{BodyState, RobotParams};
use crate::tail::FinKinematics;

/// Force in the body frame and moment about the centre of mass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub mz: f64,
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench {
            fx: self.fx + o.fx,
            fy: self.fy + o.fy,
            mz: self.mz + o.mz,
        }
    }
}

/// Fin load: its wrench on the body plus the moment it exerts about the hinge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FinLoad {
    pub wrench: Wrench,
    pub hinge_moment: f64,
}

pub fn body_wrench(body: &BodyState, params: &RobotParams) -> Wrench {
    let q = 0.5 * params.fluid_density;
    Wrench {
        fx: -q * params.cd_surge * params.frontal_area * body.u * body.u.abs(),
        fy: -q * params.cd_sway * params.lateral_area * body.v * body.v.abs(),
        mz: -params.yaw_damping * body.r * body.r.abs(),
    }
}

/// Normal force on the fin from the relative flow `W = -v_fin`.
///
/// With `n` the chord normal, `|W|² sin α = |W| (W·n)`, so the force
/// `½ ρ S C_N |W| (W·n) n` pushes the fin along the normal component of the
/// oncoming flow.
pub fn fin_wrench(fin: &FinKinematics, body: &BodyState, params: &RobotParams) -> FinLoad {
    let flow = -fin.velocity;
    let speed = flow.norm();
    if speed == 0.0 {
        return FinLoad::default();
    }
    let chord = fin.chord();
    let normal = chord.perp();
    let q = 0.5 * params.fluid_density * params.fin_area * params.fin_normal_coeff;
    let force = normal * (q * speed * flow.dot(normal));

    let (s, c) = body.yaw.sin_cos();
    let force_body = force.rotate_sc(-s, c);
    let lever = fin.position - Vec2::new(body.x, body.y);
    FinLoad {
        wrench: Wrench {
            fx: force_body.x,
            fy: force_body.y,
            mz: lever.cross(force),
        },
        hinge_moment: (chord * params.hinge_arm()).cross(force),
    }
}
