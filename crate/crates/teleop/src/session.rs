use std::sync::Arc;

use serpentik::{ik_lookup, ArmModel, ConfigTable, DofVector, Error, Point, TankModel, NUM_DOFS};

use crate::protocol::{ClientMessage, ErrorCode, Mode, ServerMessage};

/// The learned controller a service instance serves. Shared read-only by sessions.
#[derive(Debug)]
pub struct Controller {
    pub model: ArmModel,
    pub tank: TankModel,
    pub table: ConfigTable,
}

impl Controller {
    /// Fails if the table was learned for a different arm or does not validate.
    pub fn new(model: ArmModel, tank: TankModel, table: ConfigTable) -> serpentik::Result<Self> {
        table.ensure_model(&model)?;
        table.validate(&model)?;
        Ok(Controller { model, tank, table })
    }
}

/// One client's state. Starts at the zero configuration in full-robotic mode.
#[derive(Debug, Clone)]
pub struct Session {
    controller: Arc<Controller>,
    mode: Mode,
    dofs: DofVector,
    target: Option<Point>,
    deviation: Option<f64>,
}

impl Session {
    pub fn new(controller: Arc<Controller>) -> Self {
        Session {
            controller,
            mode: Mode::FullRobotic,
            dofs: DofVector::ZERO,
            target: None,
            deviation: None,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dofs(&self) -> &DofVector {
        &self.dofs
    }

    /// Parses one frame and handles it. Malformed input gets an error reply.
    pub fn handle_text(&mut self, text: &str) -> ServerMessage {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => ServerMessage::error(ErrorCode::ParseError, e.to_string()),
        }
    }

    /// Applies a message. On error the session is left exactly as it was.
    pub fn handle(&mut self, msg: ClientMessage) -> ServerMessage {
        let result = match msg {
            ClientMessage::SetTarget { x, y, z } => self.set_target(Point::new(x, y, z)),
            ClientMessage::Jog { dof, delta } => self.jog(dof, delta),
            ClientMessage::SetMode { mode } => self.set_mode(&mode),
            ClientMessage::GetState => Ok(()),
        };
        match result {
            Ok(()) => self.state(),
            Err(reply) => reply,
        }
    }

    fn set_target(&mut self, p: Point) -> Result<(), ServerMessage> {
        if self.mode != Mode::FullRobotic {
            return Err(ServerMessage::error(
                ErrorCode::WrongMode,
                "set_target needs full_robotic mode",
            ));
        }
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(ServerMessage::error(ErrorCode::InvalidValue, "target must be finite"));
        }
        let c = &self.controller;
        if !c.tank.contains(&p) {
            return Err(ServerMessage::error(
                ErrorCode::OutOfWorkspace,
                format!("({}, {}, {}) is outside the tank", p.x, p.y, p.z),
            ));
        }
        let q = ik_lookup(&c.table, &c.model, &p).map_err(lookup_error)?;
        let tip = c.model.end_effector(&q).map_err(lookup_error)?;
        self.dofs = q;
        self.target = Some(p);
        self.deviation = Some((tip - p).norm());
        Ok(())
    }

    fn jog(&mut self, dof: i64, delta: f64) -> Result<(), ServerMessage> {
        if self.mode != Mode::Telerobotic {
            return Err(ServerMessage::error(ErrorCode::WrongMode, "jog needs telerobotic mode"));
        }
        let d = usize::try_from(dof)
            .ok()
            .filter(|&d| d < NUM_DOFS)
            .ok_or_else(|| ServerMessage::error(ErrorCode::BadDof, format!("dof must be 0-9, got {dof}")))?;
        if !delta.is_finite() {
            return Err(ServerMessage::error(ErrorCode::InvalidValue, "delta must be finite"));
        }
        let mut q = self.dofs;
        q[d] += delta;
        self.dofs = self.controller.model.clamp(&q);
        self.target = None;
        self.deviation = None;
        Ok(())
    }

    fn set_mode(&mut self, mode: &str) -> Result<(), ServerMessage> {
        self.mode = Mode::parse(mode).ok_or_else(|| {
            ServerMessage::error(
                ErrorCode::UnknownMode,
                format!("unknown mode {mode:?} (full_robotic | telerobotic)"),
            )
        })?;
        Ok(())
    }

    /// Current state. The pose is recomputed from the joint values every time.
    pub fn state(&self) -> ServerMessage {
        let pose = self
            .controller
            .model
            .forward_kinematics(&self.dofs)
            .expect("session joints stay within limits");
        let xyz = |p: &Point| [p.x, p.y, p.z];
        ServerMessage::State {
            mode: self.mode,
            dofs: *self.dofs.as_array(),
            points: pose.points.iter().map(xyz).collect(),
            ee: xyz(&pose.end_effector()),
            target: self.target.as_ref().map(xyz),
            deviation: self.deviation,
        }
    }
}

fn lookup_error(e: Error) -> ServerMessage {
    let code = match e {
        Error::OutOfWorkspace { .. } => ErrorCode::OutOfWorkspace,
        Error::UnconvergedCell { .. } => ErrorCode::UnconvergedCell,
        _ => ErrorCode::Internal,
    };
    ServerMessage::error(code, e.to_string())
}
