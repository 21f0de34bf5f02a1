//! Relative-direction oracle.

use super::layout::{Door, GeometricLayout};
use super::text::{Frame, Target};
use crate::error::{Error, Result};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};

/// How far inside the entered door the observer stands.
pub const OBSERVER_OFFSET: f64 = 1.0 / 64.0;

/// Tolerance on |forward| − |lateral| below which a direction is a tie.
pub const EPS_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Left,
    Right,
    Front,
    Back,
}

impl Answer {
    pub const ALL: [Answer; 4] = [Answer::Left, Answer::Right, Answer::Front, Answer::Back];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Answer> {
        Answer::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Answer::Left => "left",
            Answer::Right => "right",
            Answer::Front => "front",
            Answer::Back => "back",
        }
    }

    pub fn parse(s: &str) -> Option<Answer> {
        Answer::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// Direction of `target` for an observer at `observer` looking along the
/// unit vector `facing`. Left is the observer's own left.
pub fn relative_direction(observer: Point, facing: Point, target: Point) -> Result<Answer> {
    let v = target.sub(observer);
    let forward = v.dot(facing);
    let lateral = facing.cross(v);
    if (forward.abs() - lateral.abs()).abs() < EPS_ANGLE {
        return Err(Error::Ambiguous(forward));
    }
    Ok(if forward >= lateral.abs() && forward > 0.0 {
        Answer::Front
    } else if -forward >= lateral.abs() {
        Answer::Back
    } else if lateral > 0.0 {
        Answer::Left
    } else {
        Answer::Right
    })
}

fn door_of(g: &GeometricLayout, frame: Frame) -> Result<Door> {
    match frame {
        Frame::House => Ok(g.house_door),
        Frame::Room(n) => g
            .room(n)
            .map(|r| r.door)
            .ok_or_else(|| Error::Contract(format!("no room {n}"))),
    }
}

fn position_of(g: &GeometricLayout, target: Target) -> Result<Point> {
    match target {
        Target::HouseDoor => Ok(g.house_door.pos),
        Target::RoomDoor(n) => g
            .room(n)
            .map(|r| r.door.pos)
            .ok_or_else(|| Error::Contract(format!("no room {n}"))),
        Target::Object(k) => g
            .object(k)
            .ok_or_else(|| Error::Contract(format!("no {}", k.name()))),
    }
}

/// Answer to "entering `frame`, where is `target`?". The observer stands
/// just inside the frame's door, facing the way it opens.
pub fn compute_answer(g: &GeometricLayout, frame: Frame, target: Target) -> Result<Answer> {
    let door = door_of(g, frame)?;
    let facing = door.opens.unit();
    let observer = door.pos.add(facing.scale(OBSERVER_OFFSET));
    relative_direction(observer, facing, position_of(g, target)?)
}
