//! Symbolic house layouts and their realization on the unit square.
//!
//! The house is `[0,1]²` divided into a 3×3 anchor grid (column 0 is west,
//! row 0 is south). Rooms are unions of grid cells: a small room is one cell,
//! a medium room two adjacent cells, a large room a full-length strip.

use crate::error::{Error, Result};
use crate::geometry::Point;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Chance that a room, or the empty space, holds an object.
pub const OBJECT_PROBABILITY: f64 = 0.52;

const LAYOUT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    N,
    S,
    E,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::S, Dir::E, Dir::W];

    pub fn unit(self) -> Point {
        match self {
            Dir::N => Point::new(0.0, 1.0),
            Dir::S => Point::new(0.0, -1.0),
            Dir::E => Point::new(1.0, 0.0),
            Dir::W => Point::new(-1.0, 0.0),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::N => Dir::S,
            Dir::S => Dir::N,
            Dir::E => Dir::W,
            Dir::W => Dir::E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anchor {
    N,
    S,
    E,
    W,
    C,
    NE,
    SE,
    NW,
    SW,
}

impl Anchor {
    pub const ALL: [Anchor; 9] = [
        Anchor::N,
        Anchor::S,
        Anchor::E,
        Anchor::W,
        Anchor::C,
        Anchor::NE,
        Anchor::SE,
        Anchor::NW,
        Anchor::SW,
    ];

    /// (column, row) of the anchor's grid cell.
    pub fn cell(self) -> (usize, usize) {
        match self {
            Anchor::N => (1, 2),
            Anchor::S => (1, 0),
            Anchor::E => (2, 1),
            Anchor::W => (0, 1),
            Anchor::C => (1, 1),
            Anchor::NE => (2, 2),
            Anchor::SE => (2, 0),
            Anchor::NW => (0, 2),
            Anchor::SW => (0, 0),
        }
    }

    pub fn from_cell(col: usize, row: usize) -> Anchor {
        *Anchor::ALL
            .iter()
            .find(|a| a.cell() == (col, row))
            .expect("cell inside 3x3 grid")
    }

    fn mask(self) -> u16 {
        let (c, r) = self.cell();
        1 << (r * 3 + c)
    }

    pub fn is_cardinal(self) -> bool {
        matches!(self, Anchor::N | Anchor::S | Anchor::E | Anchor::W)
    }

    /// Position of the anchor within a rectangle's own 3×3 grid.
    pub fn point_in(self, r: &Rect) -> Point {
        let (c, row) = self.cell();
        Point::new(
            r.x0 + (c as f64 + 0.5) * r.width() / 3.0,
            r.y0 + (row as f64 + 0.5) * r.height() / 3.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    NE,
    SE,
    NW,
    SW,
}

impl Corner {
    pub fn anchor(self) -> Anchor {
        match self {
            Corner::NE => Anchor::NE,
            Corner::SE => Anchor::SE,
            Corner::NW => Anchor::NW,
            Corner::SW => Anchor::SW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    NorthSouth,
    EastWest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoomShape {
    Small(Anchor),
    /// Two edge-adjacent cells; stored in canonical (row-major from the
    /// north-west) order.
    Medium(Anchor, Anchor),
    /// A full-length strip; `lane` is W/C/E for north-south strips and
    /// N/C/S for east-west strips.
    Large { axis: Axis, lane: Anchor },
}

impl RoomShape {
    pub fn cells(&self) -> u16 {
        match *self {
            RoomShape::Small(a) => a.mask(),
            RoomShape::Medium(a, b) => a.mask() | b.mask(),
            RoomShape::Large { axis, lane } => {
                let (lc, lr) = lane.cell();
                (0..3)
                    .map(|i| match axis {
                        Axis::NorthSouth => 1u16 << (i * 3 + lc),
                        Axis::EastWest => 1u16 << (lr * 3 + i),
                    })
                    .fold(0, |m, b| m | b)
            }
        }
    }

    pub fn rect(&self) -> Rect {
        let m = self.cells();
        let mut r = Rect {
            x0: 1.0,
            y0: 1.0,
            x1: 0.0,
            y1: 0.0,
        };
        for i in 0..9 {
            if m & (1 << i) != 0 {
                let (c, row) = ((i % 3) as f64, (i / 3) as f64);
                r.x0 = r.x0.min(c / 3.0);
                r.y0 = r.y0.min(row / 3.0);
                r.x1 = r.x1.max((c + 1.0) / 3.0);
                r.y1 = r.y1.max((row + 1.0) / 3.0);
            }
        }
        r
    }

    /// All shapes the templates can express.
    pub fn all() -> Vec<RoomShape> {
        let mut v: Vec<RoomShape> = Anchor::ALL.iter().map(|&a| RoomShape::Small(a)).collect();
        for (i, &a) in Anchor::ALL.iter().enumerate() {
            for &b in &Anchor::ALL[i + 1..] {
                let ((ac, ar), (bc, br)) = (a.cell(), b.cell());
                if ac.abs_diff(bc) + ar.abs_diff(br) == 1 {
                    v.push(RoomShape::medium(a, b));
                }
            }
        }
        for lane in [Anchor::W, Anchor::C, Anchor::E] {
            v.push(RoomShape::Large {
                axis: Axis::NorthSouth,
                lane,
            });
        }
        for lane in [Anchor::N, Anchor::C, Anchor::S] {
            v.push(RoomShape::Large {
                axis: Axis::EastWest,
                lane,
            });
        }
        v
    }

    /// Canonical medium room over two adjacent cells.
    pub fn medium(a: Anchor, b: Anchor) -> RoomShape {
        let key = |x: Anchor| {
            let (c, r) = x.cell();
            (2 - r) * 3 + c
        };
        if key(a) <= key(b) {
            RoomShape::Medium(a, b)
        } else {
            RoomShape::Medium(b, a)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DoorSpec {
    /// Middle of the named wall, opening inward.
    WallMiddle(Dir),
    /// On the named corner's side, opening towards `opens`.
    Corner { corner: Corner, opens: Dir },
}

impl DoorSpec {
    /// The twelve door placements the templates can express.
    pub fn all() -> Vec<DoorSpec> {
        let mut v: Vec<DoorSpec> = Dir::ALL.iter().map(|&d| DoorSpec::WallMiddle(d)).collect();
        for (corner, a, b) in [
            (Corner::NE, Dir::S, Dir::W),
            (Corner::NW, Dir::S, Dir::E),
            (Corner::SE, Dir::N, Dir::W),
            (Corner::SW, Dir::N, Dir::E),
        ] {
            v.push(DoorSpec::Corner { corner, opens: a });
            v.push(DoorSpec::Corner { corner, opens: b });
        }
        v
    }

    /// Door position on `r`'s boundary and its inward opening direction.
    pub fn realize(&self, r: &Rect) -> Door {
        match *self {
            DoorSpec::WallMiddle(wall) => {
                let pos = match wall {
                    Dir::N => Point::new(r.cx(), r.y1),
                    Dir::S => Point::new(r.cx(), r.y0),
                    Dir::E => Point::new(r.x1, r.cy()),
                    Dir::W => Point::new(r.x0, r.cy()),
                };
                Door {
                    pos,
                    opens: wall.opposite(),
                }
            }
            DoorSpec::Corner { corner, opens } => {
                let sub = corner.anchor().point_in(r);
                let pos = match opens {
                    Dir::S => Point::new(sub.x, r.y1),
                    Dir::N => Point::new(sub.x, r.y0),
                    Dir::W => Point::new(r.x1, sub.y),
                    Dir::E => Point::new(r.x0, sub.y),
                };
                Door { pos, opens }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectKind {
    Cube,
    Cuboid,
    Sphere,
    Cone,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] = [
        ObjectKind::Cube,
        ObjectKind::Cuboid,
        ObjectKind::Sphere,
        ObjectKind::Cone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Cube => "cube",
            ObjectKind::Cuboid => "cuboid",
            ObjectKind::Sphere => "sphere",
            ObjectKind::Cone => "cone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub kind: ObjectKind,
    pub spot: Anchor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomNode {
    pub number: u8,
    pub shape: RoomShape,
    pub door: DoorSpec,
    pub object: Option<ObjectNode>,
}

/// The symbolic house: a door, one to three rooms, and possibly an object in
/// the space outside all rooms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutTree {
    pub house_door: DoorSpec,
    pub rooms: Vec<RoomNode>,
    pub empty_object: Option<ObjectNode>,
}

impl LayoutTree {
    pub fn objects(&self) -> impl Iterator<Item = ObjectNode> + '_ {
        self.rooms
            .iter()
            .filter_map(|r| r.object)
            .chain(self.empty_object)
    }

    pub fn room(&self, number: u8) -> Option<&RoomNode> {
        self.rooms.iter().find(|r| r.number == number)
    }

    fn occupied(&self) -> u16 {
        self.rooms.iter().fold(0, |m, r| m | r.shape.cells())
    }

    pub fn validate(&self) -> Result<()> {
        if self.rooms.is_empty() || self.rooms.len() > 3 {
            return Err(Error::Contract(format!("{} rooms", self.rooms.len())));
        }
        let mut kinds: Vec<ObjectKind> = self.objects().map(|o| o.kind).collect();
        kinds.sort();
        kinds.dedup();
        if kinds.len() != self.objects().count() {
            return Err(Error::Contract("object type repeated".into()));
        }
        for (i, r) in self.rooms.iter().enumerate() {
            if r.number as usize != i + 1 {
                return Err(Error::Contract("rooms must be numbered 1..=n".into()));
            }
        }
        if let Some(o) = self.empty_object {
            if self.occupied() & o.spot.mask() != 0 {
                return Err(Error::Placement("empty-space object inside a room".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn cx(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    pub fn cy(&self) -> f64 {
        0.5 * (self.y0 + self.y1)
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.x0..=self.x1).contains(&p.x) && (self.y0..=self.y1).contains(&p.y)
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        let e = 1e-12;
        self.contains(p)
            && ((p.x - self.x0).abs() < e
                || (p.x - self.x1).abs() < e
                || (p.y - self.y0).abs() < e
                || (p.y - self.y1).abs() < e)
    }

    /// Interiors overlap (shared edges are allowed).
    pub fn overlaps(&self, o: &Rect) -> bool {
        let e = 1e-12;
        self.x0 < o.x1 - e && o.x0 < self.x1 - e && self.y0 < o.y1 - e && o.y0 < self.y1 - e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub pos: Point,
    /// Inward opening direction.
    pub opens: Dir,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomGeom {
    pub number: u8,
    pub rect: Rect,
    pub door: Door,
    pub object: Option<(ObjectKind, Point)>,
}

/// Coordinates of every entity of a layout tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricLayout {
    pub house_door: Door,
    pub rooms: Vec<RoomGeom>,
    pub empty_object: Option<(ObjectKind, Point)>,
}

impl GeometricLayout {
    pub fn object(&self, kind: ObjectKind) -> Option<Point> {
        self.rooms
            .iter()
            .filter_map(|r| r.object)
            .chain(self.empty_object)
            .find(|(k, _)| *k == kind)
            .map(|(_, p)| p)
    }

    pub fn room(&self, number: u8) -> Option<&RoomGeom> {
        self.rooms.iter().find(|r| r.number == number)
    }
}

/// Maps a layout tree to coordinates. Fails if two rooms overlap.
pub fn realize_geometry(t: &LayoutTree) -> Result<GeometricLayout> {
    let mut used = 0u16;
    for r in &t.rooms {
        let m = r.shape.cells();
        if used & m != 0 {
            return Err(Error::Placement(format!("room {} overlaps another room", r.number)));
        }
        used |= m;
    }
    if let Some(o) = t.empty_object {
        if used & o.spot.mask() != 0 {
            return Err(Error::Placement("empty-space object inside a room".into()));
        }
    }
    let rooms = t
        .rooms
        .iter()
        .map(|r| {
            let rect = r.shape.rect();
            RoomGeom {
                number: r.number,
                rect,
                door: r.door.realize(&rect),
                object: r.object.map(|o| (o.kind, o.spot.point_in(&rect))),
            }
        })
        .collect();
    Ok(GeometricLayout {
        house_door: t.house_door.realize(&Rect::UNIT),
        rooms,
        empty_object: t.empty_object.map(|o| (o.kind, o.spot.point_in(&Rect::UNIT))),
    })
}

/// Draws a random layout tree. The room count is uniform on {1,2,3}; room
/// placements are redrawn (keeping the count) until no two rooms overlap.
pub fn sample_layout<R: Rng + ?Sized>(rng: &mut R) -> Result<LayoutTree> {
    let n_rooms = rng.gen_range(1..=3u8);
    let shapes = RoomShape::all();
    let doors = DoorSpec::all();
    for _ in 0..LAYOUT_ATTEMPTS {
        let mut rooms: Vec<RoomNode> = (1..=n_rooms)
            .map(|number| RoomNode {
                number,
                shape: *shapes.choose(rng).unwrap(),
                door: *doors.choose(rng).unwrap(),
                object: None,
            })
            .collect();
        let mut used = 0u16;
        if rooms.iter().any(|r| {
            let m = r.shape.cells();
            let clash = used & m != 0;
            used |= m;
            clash
        }) {
            continue;
        }
        let mut kinds = ObjectKind::ALL.to_vec();
        kinds.shuffle(rng);
        for r in rooms.iter_mut() {
            if rng.gen_bool(OBJECT_PROBABILITY) {
                r.object = Some(ObjectNode {
                    kind: kinds.pop().unwrap(),
                    spot: *Anchor::ALL.choose(rng).unwrap(),
                });
            }
        }
        let free: Vec<Anchor> = Anchor::ALL
            .iter()
            .copied()
            .filter(|a| used & a.mask() == 0)
            .collect();
        let empty_object = if !free.is_empty() && rng.gen_bool(OBJECT_PROBABILITY) {
            Some(ObjectNode {
                kind: kinds.pop().unwrap(),
                spot: *free.choose(rng).unwrap(),
            })
        } else {
            None
        };
        return Ok(LayoutTree {
            house_door: *doors.choose(rng).unwrap(),
            rooms,
            empty_object,
        });
    }
    Err(Error::Generation(format!(
        "no non-overlapping {n_rooms}-room layout in {LAYOUT_ATTEMPTS} attempts"
    )))
}
