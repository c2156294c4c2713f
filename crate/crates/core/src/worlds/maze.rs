//! Procedural perfect mazes as a contextual MDP.
//!
//! Each context is a maze carved by randomized depth-first search from the
//! top-left cell; the goal is the bottom-right cell. The agent sees its cell
//! and the four walls around it, never the context id, so one observation
//! policy acts in every maze.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use crate::epistemic::{ContextEpisode, ContextSet, ContextualMdp};
use crate::error::{Error, Result};
use crate::mdp::{MdpBuilder, TabularMdp};
use crate::random::rng;

pub const MAZE_DISCOUNT: f64 = 0.99;
const MIN_SIDE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn bit(self) -> u8 {
        1 << self as u8
    }

    fn opposite(self) -> Direction {
        Direction::ALL[(self as usize + 2) % 4]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeContext {
    pub id: usize,
    pub width: usize,
    pub height: usize,
    /// Per cell, row-major: bit `d` set when the passage in direction `d` is open.
    pub open: Vec<u8>,
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

impl MazeContext {
    /// A perfect maze from randomized depth-first search.
    pub fn generate(id: usize, width: usize, height: usize, seed: u64) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::InvalidParameter(format!(
                "maze must be at least {MIN_SIDE}x{MIN_SIDE}, got {width}x{height}"
            )));
        }
        let mut g = rng(seed);
        let mut maze = MazeContext {
            id,
            width,
            height,
            open: vec![0; width * height],
            start: (0, 0),
            goal: (width - 1, height - 1),
        };
        let mut visited = vec![false; width * height];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(&cell) = stack.last() {
            let options: Vec<(Direction, usize)> = Direction::ALL
                .iter()
                .filter_map(|&d| maze.neighbor(cell, d).map(|n| (d, n)))
                .filter(|&(_, n)| !visited[n])
                .collect();
            if options.is_empty() {
                stack.pop();
                continue;
            }
            let (d, next) = options[g.gen_range(0..options.len())];
            maze.open[cell] |= d.bit();
            maze.open[next] |= d.opposite().bit();
            visited[next] = true;
            stack.push(next);
        }
        Ok(maze)
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.width, cell / self.width)
    }

    fn neighbor(&self, cell: usize, d: Direction) -> Option<usize> {
        let (x, y) = self.coords(cell);
        let (dx, dy) = d.delta();
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
            None
        } else {
            Some(self.cell(nx as usize, ny as usize))
        }
    }

    pub fn is_open(&self, cell: usize, d: Direction) -> bool {
        self.open[cell] & d.bit() != 0
    }

    /// Moving into a wall leaves the agent in place.
    pub fn step(&self, cell: usize, d: Direction) -> usize {
        if self.is_open(cell, d) {
            self.neighbor(cell, d).expect("open passages stay inside the border")
        } else {
            cell
        }
    }

    /// `(2w+1) x (2h+1)` characters: `#` wall, `.` open, `S` start, `G` goal.
    pub fn to_grid(&self) -> String {
        let (gw, gh) = (2 * self.width + 1, 2 * self.height + 1);
        let mut chars = vec![vec!['#'; gw]; gh];
        for cell in 0..self.num_cells() {
            let (x, y) = self.coords(cell);
            let (cx, cy) = (2 * x + 1, 2 * y + 1);
            chars[cy][cx] = '.';
            if self.is_open(cell, Direction::East) {
                chars[cy][cx + 1] = '.';
            }
            if self.is_open(cell, Direction::South) {
                chars[cy + 1][cx] = '.';
            }
        }
        chars[2 * self.start.1 + 1][2 * self.start.0 + 1] = 'S';
        chars[2 * self.goal.1 + 1][2 * self.goal.0 + 1] = 'G';
        let mut out = String::new();
        for row in chars {
            let _ = writeln!(out, "{}", row.into_iter().collect::<String>());
        }
        out
    }
}

/// Inverse of [`MazeContext::to_grid`].
pub fn parse_grid(text: &str, id: usize) -> Result<MazeContext> {
    let rows: Vec<Vec<char>> = text
        .lines()
        .map(|l| l.trim_end().chars().collect::<Vec<_>>())
        .filter(|r| !r.is_empty())
        .collect();
    let gh = rows.len();
    let gw = rows.first().map_or(0, Vec::len);
    if gh < 3 || gw < 3 || gh.is_multiple_of(2) || gw.is_multiple_of(2) {
        return Err(Error::parse(1, "grid must have odd width and height of at least 3"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != gw) {
        return Err(Error::parse(i + 1, "rows differ in length"));
    }
    let (width, height) = (gw / 2, gh / 2);
    let mut maze = MazeContext {
        id,
        width,
        height,
        open: vec![0; width * height],
        start: (usize::MAX, 0),
        goal: (usize::MAX, 0),
    };
    for (gy, row) in rows.iter().enumerate() {
        for (gx, &ch) in row.iter().enumerate() {
            let border = gx == 0 || gy == 0 || gx == gw - 1 || gy == gh - 1;
            let cell_pos = gx % 2 == 1 && gy % 2 == 1;
            let post = gx % 2 == 0 && gy % 2 == 0;
            match ch {
                '#' => {}
                '.' | 'S' | 'G' if border || post => {
                    return Err(Error::parse(gy + 1, format!("column {} must be a wall", gx + 1)))
                }
                'S' | 'G' if !cell_pos => {
                    return Err(Error::parse(gy + 1, "start and goal must sit on cells"))
                }
                'S' | 'G' => {
                    let slot = if ch == 'S' { &mut maze.start } else { &mut maze.goal };
                    if slot.0 != usize::MAX {
                        return Err(Error::parse(gy + 1, format!("more than one '{ch}'")));
                    }
                    *slot = (gx / 2, gy / 2);
                }
                '.' if cell_pos => {}
                '.' => {
                    // A passage between two cells.
                    let (x, y) = ((gx - 1) / 2, (gy - 1) / 2);
                    let cell = maze.cell(x, y);
                    if gx % 2 == 0 {
                        maze.open[cell] |= Direction::East.bit();
                        maze.open[cell + 1] |= Direction::West.bit();
                    } else {
                        maze.open[cell] |= Direction::South.bit();
                        maze.open[cell + width] |= Direction::North.bit();
                    }
                }
                other => return Err(Error::parse(gy + 1, format!("unexpected character '{other}'"))),
            }
        }
    }
    for (cy, row) in rows.iter().enumerate().skip(1).step_by(2) {
        for cx in (1..gw).step_by(2) {
            if row[cx] == '#' {
                return Err(Error::parse(cy + 1, "cell positions must be open"));
            }
        }
    }
    if maze.start.0 == usize::MAX || maze.goal.0 == usize::MAX {
        return Err(Error::parse(gh, "grid needs one 'S' and one 'G'"));
    }
    if shortest_path_length(&maze).is_none() {
        return Err(Error::InvalidParameter("goal is unreachable from start".into()));
    }
    Ok(maze)
}

/// Moves from start to goal, by breadth-first search.
pub fn shortest_path_length(maze: &MazeContext) -> Option<usize> {
    let start = maze.cell(maze.start.0, maze.start.1);
    let goal = maze.cell(maze.goal.0, maze.goal.1);
    let mut dist = vec![usize::MAX; maze.num_cells()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            return Some(dist[c]);
        }
        for d in Direction::ALL {
            let n = maze.step(c, d);
            if dist[n] == usize::MAX {
                dist[n] = dist[c] + 1;
                queue.push_back(n);
            }
        }
    }
    None
}

/// Cells plus a terminal state. Any action at the goal pays 1 and ends the
/// episode, so an optimal policy earns `γ^L` for a shortest path of `L` moves.
pub fn maze_mdp(maze: &MazeContext, gamma: f64) -> Result<TabularMdp> {
    let cells = maze.num_cells();
    let terminal = cells;
    let goal = maze.cell(maze.goal.0, maze.goal.1);
    let mut b = MdpBuilder::new(cells + 1, 4, gamma);
    b.initial(maze.cell(maze.start.0, maze.start.1), 1.0).terminal(terminal);
    for c in 0..cells {
        for (a, d) in Direction::ALL.into_iter().enumerate() {
            if c == goal {
                b.deterministic(c, a, terminal).reward(c, a, 1.0);
            } else {
                b.deterministic(c, a, maze.step(c, d));
            }
        }
    }
    b.build()
}

/// Observation `cell * 16 + open-passage bits`.
fn maze_episode(maze: &MazeContext, gamma: f64) -> Result<ContextEpisode> {
    let mdp = maze_mdp(maze, gamma)?;
    let mut observation: Vec<Option<usize>> = (0..maze.num_cells()).map(|c| Some(c * 16 + maze.open[c] as usize)).collect();
    observation.push(None);
    Ok(ContextEpisode { mdp, observation })
}

#[derive(Debug, Clone)]
pub struct MazeSuite {
    pub mazes: Vec<MazeContext>,
    pub contexts: ContextualMdp,
    pub train: ContextSet,
    pub test: ContextSet,
}

/// `num_contexts` mazes; the first `num_train` form the training split.
/// Maze `c` depends only on `seed` and `c`.
pub fn make_contextual_maze(
    num_contexts: usize,
    num_train: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<MazeSuite> {
    if num_train == 0 || num_train > num_contexts {
        return Err(Error::InvalidParameter(format!(
            "training split {num_train} must lie in 1..={num_contexts}"
        )));
    }
    let mut g = rng(seed);
    let mazes = (0..num_contexts)
        .map(|id| MazeContext::generate(id, width, height, g.gen()))
        .collect::<Result<Vec<_>>>()?;
    let episodes = mazes
        .iter()
        .map(|m| maze_episode(m, MAZE_DISCOUNT))
        .collect::<Result<Vec<_>>>()?;
    let contexts = ContextualMdp::new(episodes, width * height * 16)?;
    Ok(MazeSuite {
        train: ContextSet::range(0, num_train),
        test: ContextSet::range(num_train, num_contexts),
        mazes,
        contexts,
    })
}
