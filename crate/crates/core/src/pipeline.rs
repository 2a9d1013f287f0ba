//! Split-path quantities at one point, computed once and shared by the checks.

use crate::error::GeometryError;
use crate::metric::{compute_kinematics, eval_frame, FrameData, KinematicSet, MetricSpec};
use crate::spatial::{spatial_connection, spatial_curvature, ConnectionSet, SpatialCurvature};
use crate::structure::{kinematic_derivatives, KinematicDerivatives};

#[derive(Debug, Clone)]
pub struct SplitPoint {
    pub frame: FrameData,
    pub kin: KinematicSet,
    pub conn: ConnectionSet,
    pub curv: SpatialCurvature,
    pub dv: KinematicDerivatives,
}

impl SplitPoint {
    pub fn new(
        spec: &MetricSpec,
        point: [f64; 4],
        order: usize,
    ) -> Result<SplitPoint, GeometryError> {
        let frame = eval_frame(spec, point, order)?;
        let kin = compute_kinematics(&frame)?;
        let conn = spatial_connection(&frame)?;
        let curv = spatial_curvature(&conn, &kin, &frame)?;
        let dv = kinematic_derivatives(&frame, &kin, &conn)?;
        Ok(SplitPoint {
            frame,
            kin,
            conn,
            curv,
            dv,
        })
    }
}
