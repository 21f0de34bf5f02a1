//! Sentence templates, description and question generation, tokenization,
//! and the inverse parser.
//!
//! Every template is a token sequence with single-token `{slot}`s. The same
//! table drives rendering and parsing, so a sentence parses back to exactly
//! the structure that produced it.

use super::layout::{
    Anchor, Axis, Corner, Dir, DoorSpec, LayoutTree, ObjectKind, ObjectNode, RoomNode, RoomShape,
};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

const HOUSE_DOOR_MID: &str = "the house door is in the middle of the {wall} wall of the house .";
const HOUSE_DOOR_CORNER: &str =
    "the house door is located in the {corner} side of the house , such that it opens towards {opens} .";
const ROOM_DOOR_MID: [&str; 2] = [
    "the door for this room is in the middle of its {wall} wall .",
    "this room 's door is in the middle of its {wall} wall .",
];
const ROOM_DOOR_CORNER: [&str; 2] = [
    "the door for this room is located in its {corner} side , such that it opens towards {opens} .",
    "this room 's door is located in its {corner} side , such that it opens towards {opens} .",
];
const SMALL: [&str; 2] = [
    "room {n} is small in size and it is located in the {a} of the house .",
    "room {n} is located in the {a} of the house and is small in size .",
];
const MEDIUM: [&str; 2] = [
    "room {n} is medium in size and it extends from the {a} to the {b} of the house .",
    "room {n} extends from the {a} to the {b} of the house and is medium in size .",
];
const LARGE: [&str; 2] = [
    "room {n} is large in size and it stretches along the {axis} direction in the {a} of the house .",
    "room {n} stretches along the {axis} direction in the {a} of the house and is large in size .",
];
const OBJ_MID_HOUSE: &str = "a {obj} is located in the middle of the {wall} part of the house .";
const OBJ_HOUSE: &str = "a {obj} is located in the {part} part of the house .";
const OBJ_MID_ROOM: &str = "a {obj} is located in the middle of the {wall} part of this room .";
const OBJ_ROOM: &str = "a {obj} is located in the {part} part of this room .";
const QUESTION: [&str; 6] = [
    "suppose you are entering the house , where is the house door with respect to you ?",
    "suppose you are entering the house , where is the room {m} door with respect to you ?",
    "suppose you are entering the house , where is the {obj} with respect to you ?",
    "suppose you are entering the room {n} , where is the house door with respect to you ?",
    "suppose you are entering the room {n} , where is the room {m} door with respect to you ?",
    "suppose you are entering the room {n} , where is the {obj} with respect to you ?",
];

fn wall_word(d: Dir) -> &'static str {
    match d {
        Dir::N => "northern",
        Dir::S => "southern",
        Dir::E => "eastern",
        Dir::W => "western",
    }
}

fn dir_word(d: Dir) -> &'static str {
    match d {
        Dir::N => "north",
        Dir::S => "south",
        Dir::E => "east",
        Dir::W => "west",
    }
}

fn corner_word(c: Corner) -> &'static str {
    match c {
        Corner::NE => "north-eastern",
        Corner::SE => "south-eastern",
        Corner::NW => "north-western",
        Corner::SW => "south-western",
    }
}

fn anchor_word(a: Anchor) -> &'static str {
    match a {
        Anchor::N => "north",
        Anchor::S => "south",
        Anchor::E => "east",
        Anchor::W => "west",
        Anchor::C => "center",
        Anchor::NE => "north-east",
        Anchor::SE => "south-east",
        Anchor::NW => "north-west",
        Anchor::SW => "south-west",
    }
}

/// Adjective used for a non-cardinal object spot.
fn part_word(a: Anchor) -> &'static str {
    match a {
        Anchor::NE => "north-eastern",
        Anchor::SE => "south-eastern",
        Anchor::NW => "north-western",
        Anchor::SW => "south-western",
        Anchor::C => "central",
        _ => unreachable!("cardinal spots use the wall wording"),
    }
}

fn axis_word(a: Axis) -> &'static str {
    match a {
        Axis::NorthSouth => "north-south",
        Axis::EastWest => "east-west",
    }
}

fn cardinal_anchor(d: Dir) -> Anchor {
    match d {
        Dir::N => Anchor::N,
        Dir::S => Anchor::S,
        Dir::E => Anchor::E,
        Dir::W => Anchor::W,
    }
}

fn anchor_dir(a: Anchor) -> Option<Dir> {
    Dir::ALL.into_iter().find(|&d| cardinal_anchor(d) == a)
}

fn lookup<T: Copy>(all: &[T], word: &str, f: fn(T) -> &'static str) -> Result<T> {
    all.iter()
        .copied()
        .find(|&x| f(x) == word)
        .ok_or_else(|| Error::UnknownToken(word.to_string()))
}

const CORNERS: [Corner; 4] = [Corner::NE, Corner::SE, Corner::NW, Corner::SW];
const AXES: [Axis; 2] = [Axis::NorthSouth, Axis::EastWest];

/// One description sentence in structured form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sentence {
    HouseDoor(DoorSpec),
    Room {
        number: u8,
        shape: RoomShape,
        variant: u8,
    },
    /// Door of the most recently described room.
    RoomDoor { door: DoorSpec, variant: u8 },
    Object {
        kind: ObjectKind,
        spot: Anchor,
        in_room: bool,
    },
}

/// The layout entity a sentence describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subject {
    HouseDoor,
    Room(u8),
    RoomDoor(u8),
    Object(ObjectKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Described {
    pub sentence: Sentence,
    pub subject: Subject,
}

type Slots = Vec<(&'static str, String)>;

fn door_slots(d: DoorSpec) -> Slots {
    match d {
        DoorSpec::WallMiddle(w) => vec![("wall", wall_word(w).into())],
        DoorSpec::Corner { corner, opens } => vec![
            ("corner", corner_word(corner).into()),
            ("opens", dir_word(opens).into()),
        ],
    }
}

impl Sentence {
    fn template(&self) -> (&'static str, Slots) {
        match *self {
            Sentence::HouseDoor(d) => {
                let t = match d {
                    DoorSpec::WallMiddle(_) => HOUSE_DOOR_MID,
                    DoorSpec::Corner { .. } => HOUSE_DOOR_CORNER,
                };
                (t, door_slots(d))
            }
            Sentence::RoomDoor { door, variant } => {
                let v = variant as usize % 2;
                let t = match door {
                    DoorSpec::WallMiddle(_) => ROOM_DOOR_MID[v],
                    DoorSpec::Corner { .. } => ROOM_DOOR_CORNER[v],
                };
                (t, door_slots(door))
            }
            Sentence::Room {
                number,
                shape,
                variant,
            } => {
                let v = variant as usize % 2;
                let mut slots: Slots = vec![("n", number.to_string())];
                let t = match shape {
                    RoomShape::Small(a) => {
                        slots.push(("a", anchor_word(a).into()));
                        SMALL[v]
                    }
                    RoomShape::Medium(a, b) => {
                        slots.push(("a", anchor_word(a).into()));
                        slots.push(("b", anchor_word(b).into()));
                        MEDIUM[v]
                    }
                    RoomShape::Large { axis, lane } => {
                        slots.push(("axis", axis_word(axis).into()));
                        slots.push(("a", anchor_word(lane).into()));
                        LARGE[v]
                    }
                };
                (t, slots)
            }
            Sentence::Object {
                kind,
                spot,
                in_room,
            } => {
                let mut slots: Slots = vec![("obj", kind.name().into())];
                let t = match (anchor_dir(spot), in_room) {
                    (Some(d), false) => {
                        slots.push(("wall", wall_word(d).into()));
                        OBJ_MID_HOUSE
                    }
                    (Some(d), true) => {
                        slots.push(("wall", wall_word(d).into()));
                        OBJ_MID_ROOM
                    }
                    (None, false) => {
                        slots.push(("part", part_word(spot).into()));
                        OBJ_HOUSE
                    }
                    (None, true) => {
                        slots.push(("part", part_word(spot).into()));
                        OBJ_ROOM
                    }
                };
                (t, slots)
            }
        }
    }

    pub fn render(&self) -> String {
        let (t, slots) = self.template();
        fill(t, &slots)
    }

    /// Parses one sentence produced by [`Sentence::render`].
    pub fn parse(text: &str) -> Result<Sentence> {
        let toks = tokenize(text);
        let door = |m: &HashMap<&str, String>| -> Result<DoorSpec> {
            if let Some(w) = m.get("wall") {
                return Ok(DoorSpec::WallMiddle(lookup(&Dir::ALL, w, wall_word)?));
            }
            Ok(DoorSpec::Corner {
                corner: lookup(&CORNERS, &m["corner"], corner_word)?,
                opens: lookup(&Dir::ALL, &m["opens"], dir_word)?,
            })
        };
        let number = |m: &HashMap<&str, String>, k: &str| -> Result<u8> {
            m[k].parse::<u8>()
                .ok()
                .filter(|n| (1..=3).contains(n))
                .ok_or_else(|| Error::UnknownToken(m[k].clone()))
        };
        let anchor = |m: &HashMap<&str, String>, k: &str| lookup(&Anchor::ALL, &m[k], anchor_word);

        for t in [HOUSE_DOOR_MID, HOUSE_DOOR_CORNER] {
            if let Some(m) = matches(t, &toks) {
                return Ok(Sentence::HouseDoor(door(&m)?));
            }
        }
        for v in 0..2 {
            for t in [ROOM_DOOR_MID[v], ROOM_DOOR_CORNER[v]] {
                if let Some(m) = matches(t, &toks) {
                    return Ok(Sentence::RoomDoor {
                        door: door(&m)?,
                        variant: v as u8,
                    });
                }
            }
            if let Some(m) = matches(SMALL[v], &toks) {
                return Ok(Sentence::Room {
                    number: number(&m, "n")?,
                    shape: RoomShape::Small(anchor(&m, "a")?),
                    variant: v as u8,
                });
            }
            if let Some(m) = matches(MEDIUM[v], &toks) {
                let (a, b) = (anchor(&m, "a")?, anchor(&m, "b")?);
                let shape = RoomShape::medium(a, b);
                if !RoomShape::all().contains(&shape) {
                    return Err(Error::Contract(format!("cells {a:?} and {b:?} are not adjacent")));
                }
                return Ok(Sentence::Room {
                    number: number(&m, "n")?,
                    shape,
                    variant: v as u8,
                });
            }
            if let Some(m) = matches(LARGE[v], &toks) {
                let axis = lookup(&AXES, &m["axis"], axis_word)?;
                let lane = anchor(&m, "a")?;
                let shape = RoomShape::Large { axis, lane };
                if !RoomShape::all().contains(&shape) {
                    return Err(Error::Contract(format!("{lane:?} is not a lane of {axis:?}")));
                }
                return Ok(Sentence::Room {
                    number: number(&m, "n")?,
                    shape,
                    variant: v as u8,
                });
            }
        }
        for (t, in_room) in [
            (OBJ_MID_HOUSE, false),
            (OBJ_MID_ROOM, true),
            (OBJ_HOUSE, false),
            (OBJ_ROOM, true),
        ] {
            if let Some(m) = matches(t, &toks) {
                let kind = lookup(&ObjectKind::ALL, &m["obj"], ObjectKind::name)?;
                let spot = match m.get("wall") {
                    Some(w) => cardinal_anchor(lookup(&Dir::ALL, w, wall_word)?),
                    None => lookup(
                        &[Anchor::NE, Anchor::SE, Anchor::NW, Anchor::SW, Anchor::C],
                        &m["part"],
                        part_word,
                    )?,
                };
                return Ok(Sentence::Object {
                    kind,
                    spot,
                    in_room,
                });
            }
        }
        Err(Error::Contract(format!("no template matches {text:?}")))
    }
}

/// Substitutes slots and restores normal spacing and capitalization.
fn fill(template: &str, slots: &Slots) -> String {
    let words: Vec<&str> = template
        .split(' ')
        .map(|w| match w.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
            Some(name) => slots
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| v.as_str())
                .expect("slot provided"),
            None => w,
        })
        .collect();
    let mut s = String::new();
    for w in words {
        if !s.is_empty() && !matches!(w, "." | "," | "?" | "'s") {
            s.push(' ');
        }
        s.push_str(w);
    }
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => s,
    }
}

fn matches(template: &str, toks: &[String]) -> Option<HashMap<&'static str, String>> {
    let parts: Vec<&str> = template.split(' ').collect();
    if parts.len() != toks.len() {
        return None;
    }
    let mut m = HashMap::new();
    for (p, t) in parts.iter().zip(toks) {
        match p.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            Some(name) => {
                let name: &'static str = SLOT_NAMES.iter().find(|s| **s == name)?;
                m.insert(name, t.clone());
            }
            None if p == t => {}
            None => return None,
        }
    }
    Some(m)
}

const SLOT_NAMES: [&str; 10] = [
    "wall", "corner", "opens", "n", "m", "a", "b", "axis", "obj", "part",
];

/// Lowercases and splits on whitespace; `.`, `,`, `?` and the possessive
/// `'s` become separate tokens. Hyphenated words stay whole.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let mut w = word;
        let mut tail = Vec::new();
        while let Some(last) = w.chars().last().filter(|c| matches!(c, '.' | ',' | '?')) {
            tail.push(last.to_string());
            w = &w[..w.len() - 1];
        }
        if let Some(stem) = w.strip_suffix("'s") {
            if !stem.is_empty() {
                out.push(stem.to_string());
                out.push("'s".to_string());
            }
        } else if !w.is_empty() {
            out.push(w.to_string());
        }
        out.extend(tail.into_iter().rev());
    }
    out
}

/// Number of whitespace-separated words in a sentence.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased words with surrounding punctuation and the possessive `'s`
/// removed: the unit behind the word-vocabulary statistic.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !matches!(t.as_str(), "." | "," | "?" | "'s"))
        .collect()
}

/// Entity the question places the observer at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    House,
    Room(u8),
}

/// Entity the question asks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    HouseDoor,
    RoomDoor(u8),
    Object(ObjectKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Question {
    pub frame: Frame,
    pub target: Target,
}

impl Question {
    pub fn render(&self) -> String {
        let mut slots: Slots = Vec::new();
        let f = match self.frame {
            Frame::House => 0,
            Frame::Room(n) => {
                slots.push(("n", n.to_string()));
                3
            }
        };
        let t = match self.target {
            Target::HouseDoor => 0,
            Target::RoomDoor(m) => {
                slots.push(("m", m.to_string()));
                1
            }
            Target::Object(k) => {
                slots.push(("obj", k.name().into()));
                2
            }
        };
        fill(QUESTION[f + t], &slots)
    }

    pub fn parse(text: &str) -> Result<Question> {
        let toks = tokenize(text);
        let num = |s: &str| -> Result<u8> {
            s.parse::<u8>()
                .ok()
                .filter(|n| (1..=3).contains(n))
                .ok_or_else(|| Error::UnknownToken(s.to_string()))
        };
        for (i, t) in QUESTION.iter().enumerate() {
            if let Some(m) = matches(t, &toks) {
                let frame = if i < 3 {
                    Frame::House
                } else {
                    Frame::Room(num(&m["n"])?)
                };
                let target = match i % 3 {
                    0 => Target::HouseDoor,
                    1 => Target::RoomDoor(num(&m["m"])?),
                    _ => Target::Object(lookup(&ObjectKind::ALL, &m["obj"], ObjectKind::name)?),
                };
                return Ok(Question { frame, target });
            }
        }
        Err(Error::Contract(format!("not a question: {text:?}")))
    }
}

/// One sentence per entity. The house door, each room block and the
/// empty-space object are shuffled as units; inside a room block the room
/// sentence comes first and its door and object sentences follow in random
/// order.
pub fn generate_description<R: Rng + ?Sized>(t: &LayoutTree, rng: &mut R) -> Vec<Described> {
    let mut blocks: Vec<Vec<Described>> = vec![vec![Described {
        sentence: Sentence::HouseDoor(t.house_door),
        subject: Subject::HouseDoor,
    }]];
    for r in &t.rooms {
        let head = Described {
            sentence: Sentence::Room {
                number: r.number,
                shape: r.shape,
                variant: rng.gen_range(0..2),
            },
            subject: Subject::Room(r.number),
        };
        let mut tail = vec![Described {
            sentence: Sentence::RoomDoor {
                door: r.door,
                variant: rng.gen_range(0..2),
            },
            subject: Subject::RoomDoor(r.number),
        }];
        if let Some(o) = r.object {
            tail.push(Described {
                sentence: Sentence::Object {
                    kind: o.kind,
                    spot: o.spot,
                    in_room: true,
                },
                subject: Subject::Object(o.kind),
            });
        }
        tail.shuffle(rng);
        let mut block = vec![head];
        block.extend(tail);
        blocks.push(block);
    }
    if let Some(o) = t.empty_object {
        blocks.push(vec![Described {
            sentence: Sentence::Object {
                kind: o.kind,
                spot: o.spot,
                in_room: false,
            },
            subject: Subject::Object(o.kind),
        }]);
    }
    blocks.shuffle(rng);
    blocks.into_iter().flatten().collect()
}

/// Frame and target drawn uniformly from the entities present.
pub fn generate_question<R: Rng + ?Sized>(t: &LayoutTree, rng: &mut R) -> Question {
    let frames: Vec<Frame> = std::iter::once(Frame::House)
        .chain(t.rooms.iter().map(|r| Frame::Room(r.number)))
        .collect();
    let targets: Vec<Target> = std::iter::once(Target::HouseDoor)
        .chain(t.rooms.iter().map(|r| Target::RoomDoor(r.number)))
        .chain(t.objects().map(|o| Target::Object(o.kind)))
        .collect();
    Question {
        frame: *frames.choose(rng).unwrap(),
        target: *targets.choose(rng).unwrap(),
    }
}

/// Rebuilds the layout tree from a description. Room-door and in-room
/// object sentences attach to the most recent room sentence.
pub fn parse_description<S: AsRef<str>>(sentences: &[S]) -> Result<LayoutTree> {
    let mut house_door = None;
    let mut rooms: Vec<(RoomNode, bool)> = Vec::new();
    let mut empty_object = None;
    let mut current: Option<usize> = None;
    for s in sentences {
        match Sentence::parse(s.as_ref())? {
            Sentence::HouseDoor(d) => {
                if house_door.replace(d).is_some() {
                    return Err(Error::Contract("two house doors".into()));
                }
                current = None;
            }
            Sentence::Room { number, shape, .. } => {
                current = Some(rooms.len());
                rooms.push((
                    RoomNode {
                        number,
                        shape,
                        door: DoorSpec::WallMiddle(Dir::N),
                        object: None,
                    },
                    false,
                ));
            }
            Sentence::RoomDoor { door, .. } => {
                let i = current.ok_or_else(|| Error::Contract("door before any room".into()))?;
                rooms[i].0.door = door;
                rooms[i].1 = true;
            }
            Sentence::Object {
                kind,
                spot,
                in_room,
            } => {
                let node = ObjectNode { kind, spot };
                if in_room {
                    let i =
                        current.ok_or_else(|| Error::Contract("object before any room".into()))?;
                    rooms[i].0.object = Some(node);
                } else {
                    empty_object = Some(node);
                    current = None;
                }
            }
        }
    }
    if rooms.iter().any(|(_, has_door)| !has_door) {
        return Err(Error::Contract("room without a door sentence".into()));
    }
    let mut rooms: Vec<RoomNode> = rooms.into_iter().map(|(r, _)| r).collect();
    rooms.sort_by_key(|r| r.number);
    let t = LayoutTree {
        house_door: house_door.ok_or_else(|| Error::Contract("no house door".into()))?,
        rooms,
        empty_object,
    };
    t.validate()?;
    Ok(t)
}

/// Every sentence and question the templates can produce.
pub fn all_sentences() -> Vec<String> {
    let mut out = Vec::new();
    for d in DoorSpec::all() {
        out.push(Sentence::HouseDoor(d).render());
        for variant in 0..2 {
            out.push(Sentence::RoomDoor { door: d, variant }.render());
        }
    }
    for number in 1..=3 {
        for shape in RoomShape::all() {
            for variant in 0..2 {
                out.push(
                    Sentence::Room {
                        number,
                        shape,
                        variant,
                    }
                    .render(),
                );
            }
        }
    }
    for kind in ObjectKind::ALL {
        for spot in Anchor::ALL {
            for in_room in [false, true] {
                out.push(
                    Sentence::Object {
                        kind,
                        spot,
                        in_room,
                    }
                    .render(),
                );
            }
        }
    }
    out
}

pub fn all_questions() -> Vec<String> {
    let frames = [Frame::House, Frame::Room(1), Frame::Room(2), Frame::Room(3)];
    let targets = [
        Target::HouseDoor,
        Target::RoomDoor(1),
        Target::RoomDoor(2),
        Target::RoomDoor(3),
    ]
    .into_iter()
    .chain(ObjectKind::ALL.map(Target::Object));
    let targets: Vec<Target> = targets.collect();
    frames
        .iter()
        .flat_map(|&frame| targets.iter().map(move |&target| Question { frame, target }.render()))
        .collect()
}

/// Sorted token set over all templates and questions.
pub fn vocabulary() -> Vec<String> {
    let set: BTreeSet<String> = all_sentences()
        .iter()
        .chain(all_questions().iter())
        .flat_map(|s| tokenize(s))
        .collect();
    set.into_iter().collect()
}

/// Sorted word types over all templates and questions (see [`words`]).
pub fn word_vocabulary() -> Vec<String> {
    let set: BTreeSet<String> = all_sentences()
        .iter()
        .chain(all_questions().iter())
        .flat_map(|s| words(s))
        .collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::layout::sample_layout;
    use crate::seed::child_rng;

    #[test]
    fn house_door_sentence() {
        let s = Sentence::HouseDoor(DoorSpec::WallMiddle(Dir::S)).render();
        assert_eq!(
            s,
            "The house door is in the middle of the southern wall of the house."
        );
    }

    #[test]
    fn corner_and_possessive_forms() {
        let s = Sentence::RoomDoor {
            door: DoorSpec::Corner {
                corner: Corner::NE,
                opens: Dir::W,
            },
            variant: 1,
        }
        .render();
        assert_eq!(
            s,
            "This room's door is located in its north-eastern side, such that it opens towards west."
        );
        let o = Sentence::Object {
            kind: ObjectKind::Cone,
            spot: Anchor::C,
            in_room: false,
        };
        assert_eq!(o.render(), "A cone is located in the central part of the house.");
    }

    #[test]
    fn question_sentence() {
        let q = Question {
            frame: Frame::House,
            target: Target::Object(ObjectKind::Cube),
        };
        assert_eq!(
            q.render(),
            "Suppose you are entering the house, where is the cube with respect to you?"
        );
        assert_eq!(Question::parse(&q.render()).unwrap(), q);
    }

    #[test]
    fn template_space() {
        let s = all_sentences();
        let unique: BTreeSet<&String> = s.iter().collect();
        assert_eq!(unique.len(), s.len());
        assert_eq!(s.len(), 270);
        let q: BTreeSet<String> = all_questions().into_iter().collect();
        assert_eq!(q.len(), 32);
        for text in &s {
            assert_eq!(&Sentence::parse(text).unwrap().render(), text);
        }
    }

    #[test]
    fn vocabulary_sizes() {
        assert_eq!(word_vocabulary().len(), 66);
        assert_eq!(vocabulary().len(), 70);
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(
            tokenize("This room's door, ok?"),
            vec!["this", "room", "'s", "door", ",", "ok", "?"]
        );
    }

    #[test]
    fn rooms_head_their_blocks() {
        for s in 0..300 {
            let mut rng = child_rng(1, &[s]);
            let t = sample_layout(&mut rng).unwrap();
            let d = generate_description(&t, &mut rng);
            for (i, x) in d.iter().enumerate() {
                if let Subject::RoomDoor(n) = x.subject {
                    let head = d[..i]
                        .iter()
                        .rev()
                        .find(|y| matches!(y.subject, Subject::Room(_)))
                        .unwrap();
                    assert_eq!(head.subject, Subject::Room(n));
                    assert!(d[..i]
                        .iter()
                        .rposition(|y| y.subject == Subject::Room(n))
                        .is_some_and(|j| i - j <= 2));
                }
            }
        }
    }

    #[test]
    fn description_round_trip() {
        for s in 0..300 {
            let mut rng = child_rng(2, &[s]);
            let t = sample_layout(&mut rng).unwrap();
            let text: Vec<String> = generate_description(&t, &mut rng)
                .iter()
                .map(|d| d.sentence.render())
                .collect();
            assert_eq!(parse_description(&text).unwrap(), t);
        }
    }

    #[test]
    fn questions_reference_present_entities() {
        for s in 0..300 {
            let mut rng = child_rng(3, &[s]);
            let t = sample_layout(&mut rng).unwrap();
            let q = generate_question(&t, &mut rng);
            if let Target::Object(k) = q.target {
                assert!(t.objects().any(|o| o.kind == k));
            }
            if let Frame::Room(n) = q.frame {
                assert!(t.room(n).is_some());
            }
        }
    }
}
