//! One image channel per description sentence.

use super::layout::{Dir, Door, GeometricLayout};
use super::text::Subject;
use crate::error::{Error, Result};
use crate::geometry::{Canvas, Point, Raster};

/// Default channel resolution.
pub const RESOLUTION: usize = 32;

fn draw_door(r: &Raster, c: &mut Canvas, d: Door) {
    r.fill_square(c, d.pos, 3);
    let (row, col) = r.pixel(d.pos);
    let (dr, dc): (i64, i64) = match d.opens {
        Dir::N => (-1, 0),
        Dir::S => (1, 0),
        Dir::E => (0, 1),
        Dir::W => (0, -1),
    };
    for k in 2..=4 {
        let (y, x) = (row as i64 + k * dr, col as i64 + k * dc);
        if (0..r.res as i64).contains(&y) && (0..r.res as i64).contains(&x) {
            c.set(y as usize, x as usize, 1.0);
        }
    }
}

/// Channel for one entity: a room's boundary, a door's square with a stub
/// pointing the way it opens, or an object's square.
pub fn render_subject(g: &GeometricLayout, s: Subject, res: usize) -> Result<Canvas> {
    let r = Raster::new(res, 1.0);
    let mut c = Canvas::new(res, res);
    let missing = || Error::Contract(format!("{s:?} is not in the layout"));
    match s {
        Subject::HouseDoor => draw_door(&r, &mut c, g.house_door),
        Subject::Room(n) => {
            let rect = g.room(n).ok_or_else(missing)?.rect;
            r.draw_rect(
                &mut c,
                Point::new(rect.x0, rect.y0),
                rect.width(),
                rect.height(),
            );
        }
        Subject::RoomDoor(n) => draw_door(&r, &mut c, g.room(n).ok_or_else(missing)?.door),
        Subject::Object(k) => r.fill_square(&mut c, g.object(k).ok_or_else(missing)?, 3),
    }
    Ok(c)
}

/// Channels in sentence order.
pub fn render_visual(g: &GeometricLayout, subjects: &[Subject], res: usize) -> Result<Vec<Canvas>> {
    subjects.iter().map(|&s| render_subject(g, s, res)).collect()
}
