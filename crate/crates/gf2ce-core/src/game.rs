//! Finite parity games and a recursive attractor-based solver.
//!
//! Player 0 (the automaton) wins an infinite play iff the maximal priority
//! seen infinitely often is even; a player unable to move loses.

/// A finite parity game. Position `i` is owned by player `owner[i]`
/// (0 or 1), has priority `priority[i]` and successors `edges[i]`.
#[derive(Clone, Debug, Default)]
pub struct ParityGame {
    pub owner: Vec<u8>,
    pub priority: Vec<u32>,
    pub edges: Vec<Vec<u32>>,
}

impl ParityGame {
    pub fn add(&mut self, owner: u8, priority: u32) -> u32 {
        let id = self.owner.len() as u32;
        self.owner.push(owner);
        self.priority.push(priority);
        self.edges.push(Vec::new());
        id
    }

    pub fn add_edge(&mut self, from: u32, to: u32) {
        self.edges[from as usize].push(to);
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }
}

/// Winning regions and a positional strategy for each player on its region.
#[derive(Clone, Debug)]
pub struct Solution {
    pub winner: Vec<u8>,
    /// strategy[i] = chosen successor when `i` is owned by its winner
    pub strategy: Vec<Option<u32>>,
}

/// Zielonka's algorithm. Dead ends lose for their owner.
pub fn solve(game: &ParityGame) -> Solution {
    // replace dead ends by edges into a sink that loses for the owner
    let n = game.len();
    let mut g = game.clone();
    let mut sink0: Option<u32> = None; // self-loop won by player 0
    let mut sink1: Option<u32> = None; // self-loop won by player 1
    for i in 0..n {
        if g.edges[i].is_empty() {
            let target = if g.owner[i] == 0 {
                *sink1.get_or_insert_with(|| {
                    let s = g.add(0, 1);
                    g.add_edge(s, s);
                    s
                })
            } else {
                *sink0.get_or_insert_with(|| {
                    let s = g.add(1, 0);
                    g.add_edge(s, s);
                    s
                })
            };
            g.edges[i].push(target);
        }
    }
    let m = g.len();
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (from, succs) in g.edges.iter().enumerate() {
        for &to in succs {
            preds[to as usize].push(from as u32);
        }
    }
    let mut winner = vec![0u8; m];
    let mut strategy = vec![None; m];
    let mut alive: Vec<bool> = vec![true; m];
    zielonka(&g, &preds, &mut alive, &mut winner, &mut strategy);
    winner.truncate(n);
    strategy.truncate(n);
    // strategies pointing at sinks mean "no move": normalize to None
    for s in strategy.iter_mut() {
        if let Some(t) = *s {
            if t as usize >= n {
                *s = None;
            }
        }
    }
    Solution { winner, strategy }
}

fn zielonka(
    game: &ParityGame,
    preds: &[Vec<u32>],
    alive: &mut Vec<bool>,
    winner: &mut Vec<u8>,
    strategy: &mut Vec<Option<u32>>,
) {
    let live: Vec<u32> = (0..game.len() as u32)
        .filter(|&i| alive[i as usize])
        .collect();
    if live.is_empty() {
        return;
    }
    let p = live
        .iter()
        .map(|&i| game.priority[i as usize])
        .max()
        .unwrap();
    let player = (p % 2) as u8;
    let top: Vec<u32> = live
        .iter()
        .copied()
        .filter(|&i| game.priority[i as usize] == p)
        .collect();

    let (attr, attr_strat) = attractor(game, preds, alive, player, &top);

    // solve the subgame without the attractor
    let mut sub_alive = alive.clone();
    for &v in &attr {
        sub_alive[v as usize] = false;
    }
    zielonka(game, preds, &mut sub_alive, winner, strategy);

    let opponent = 1 - player;
    let opponent_wins: Vec<u32> = (0..game.len() as u32)
        .filter(|&i| alive[i as usize] && !sub_alive_contains(&attr, i) && winner[i as usize] == opponent)
        .collect();

    if opponent_wins.is_empty() {
        // the whole region goes to `player`
        for &v in &live {
            winner[v as usize] = player;
        }
        for &v in &attr {
            if game.owner[v as usize] == player {
                if let Some(s) = attr_strat[v as usize] {
                    strategy[v as usize] = Some(s);
                } else if strategy[v as usize].is_none() {
                    // a top-priority position: any live successor that stays
                    // in the winning region works; prefer one inside
                    strategy[v as usize] = game.edges[v as usize]
                        .iter()
                        .copied()
                        .find(|&t| alive[t as usize]);
                }
            }
        }
        // positions solved in the subgame keep their strategies
        return;
    }

    // the opponent attracts more
    let opponent_set: Vec<bool> = {
        let mut s = vec![false; game.len()];
        for &v in &opponent_wins {
            s[v as usize] = true;
        }
        s
    };
    let (oattr, oattr_strat) = attractor(game, preds, alive, opponent, &opponent_wins);
    for &v in &oattr {
        winner[v as usize] = opponent;
        if game.owner[v as usize] == opponent && !opponent_set[v as usize] {
            // keep sub-game strategies inside the winning core, use the
            // attractor strategy on the way there
            strategy[v as usize] = oattr_strat[v as usize];
        }
    }
    let mut rest = alive.clone();
    for &v in &oattr {
        rest[v as usize] = false;
    }
    zielonka(game, preds, &mut rest, winner, strategy);
}

fn sub_alive_contains(attr: &[u32], v: u32) -> bool {
    attr.contains(&v)
}

/// Attractor of `targets` for `player` within the alive region; returns the
/// attracted set and, for positions owned by `player`, an edge into the
/// attractor.
fn attractor(
    game: &ParityGame,
    preds: &[Vec<u32>],
    alive: &[bool],
    player: u8,
    targets: &[u32],
) -> (Vec<u32>, Vec<Option<u32>>) {
    let n = game.len();
    let mut inset = vec![false; n];
    let mut strat: Vec<Option<u32>> = vec![None; n];
    let mut queue: Vec<u32> = Vec::new();
    for &t in targets {
        if alive[t as usize] && !inset[t as usize] {
            inset[t as usize] = true;
            queue.push(t);
        }
    }
    let mut out_count: Vec<usize> = vec![0; n];
    for i in 0..n {
        if alive[i] {
            out_count[i] = game.edges[i].iter().filter(|&&t| alive[t as usize]).count();
        }
    }
    let mut qi = 0;
    while qi < queue.len() {
        let v = queue[qi];
        qi += 1;
        for &u in &preds[v as usize] {
            let ui = u as usize;
            if !alive[ui] || inset[ui] {
                continue;
            }
            if game.owner[ui] == player {
                inset[ui] = true;
                strat[ui] = Some(v);
                queue.push(u);
            } else {
                // all alive successors must lie in the set
                out_count[ui] -= 1;
                if out_count[ui] == 0 {
                    inset[ui] = true;
                    queue.push(u);
                }
            }
        }
    }
    (queue, strat)
}

#[cfg(test)]
mod tests {
    use super::*;

    // single position, self loop, even priority: player 0 wins
    #[test]
    fn even_self_loop() {
        let mut g = ParityGame::default();
        let v = g.add(0, 2);
        g.add_edge(v, v);
        let s = solve(&g);
        assert_eq!(s.winner[0], 0);
    }

    #[test]
    fn odd_self_loop() {
        let mut g = ParityGame::default();
        let v = g.add(0, 1);
        g.add_edge(v, v);
        let s = solve(&g);
        assert_eq!(s.winner[0], 1);
    }

    #[test]
    fn dead_end_loses_for_owner() {
        let mut g = ParityGame::default();
        let _v0 = g.add(0, 0); // P0 cannot move: loses
        let _v1 = g.add(1, 0); // P1 cannot move: P0 wins
        let s = solve(&g);
        assert_eq!(s.winner[0], 1);
        assert_eq!(s.winner[1], 0);
    }

    #[test]
    fn choice_matters() {
        // P0 chooses between an odd loop and an even loop
        let mut g = ParityGame::default();
        let start = g.add(0, 0);
        let bad = g.add(0, 1);
        let good = g.add(0, 2);
        g.add_edge(start, bad);
        g.add_edge(start, good);
        g.add_edge(bad, bad);
        g.add_edge(good, good);
        let s = solve(&g);
        assert_eq!(s.winner[start as usize], 0);
        assert_eq!(s.strategy[start as usize], Some(good));
        assert_eq!(s.winner[bad as usize], 1);
        assert_eq!(s.winner[good as usize], 0);
    }

    #[test]
    fn opponent_choice() {
        // P1 chooses; one branch is bad for P0, so P1 wins
        let mut g = ParityGame::default();
        let start = g.add(1, 0);
        let bad = g.add(0, 1);
        let good = g.add(0, 2);
        g.add_edge(start, bad);
        g.add_edge(start, good);
        g.add_edge(bad, bad);
        g.add_edge(good, good);
        let s = solve(&g);
        assert_eq!(s.winner[start as usize], 1);
    }

    #[test]
    fn alternating_priorities() {
        // cycle visiting 1 and 2: max infinitely often is 2, P0 wins
        let mut g = ParityGame::default();
        let a = g.add(0, 1);
        let b = g.add(1, 2);
        g.add_edge(a, b);
        g.add_edge(b, a);
        let s = solve(&g);
        assert_eq!(s.winner[a as usize], 0);
        assert_eq!(s.winner[b as usize], 0);
    }

    #[test]
    fn escape_via_strategy() {
        // P0 must route through a priority-1 position into an even loop;
        // passing 1 finitely often is fine
        let mut g = ParityGame::default();
        let a = g.add(0, 1);
        let b = g.add(0, 0);
        let c = g.add(1, 2);
        g.add_edge(a, b);
        g.add_edge(b, c);
        g.add_edge(c, c);
        let s = solve(&g);
        assert_eq!(s.winner[a as usize], 0);
        assert_eq!(s.winner[b as usize], 0);
        assert_eq!(s.winner[c as usize], 0);
    }
}
