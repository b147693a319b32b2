//! Interned fact storage with per-predicate hash indexes.

use std::hash::Hasher;

use hashbrown::HashTable;
use rustc_hash::{FxHashMap, FxHasher};

use crate::model::{Constant, Fact, Predicate};

/// Index of a fact in a [`Materialisation`](super::Materialisation).
pub type FactId = u32;

#[derive(Debug, Default, Clone)]
pub(crate) struct Interner {
    pub preds: Vec<Predicate>,
    pred_ids: FxHashMap<Predicate, u32>,
    pub consts: Vec<Constant>,
    const_ids: FxHashMap<Constant, u32>,
}

impl Interner {
    pub fn pred(&mut self, p: &Predicate) -> u32 {
        if let Some(&id) = self.pred_ids.get(p) {
            return id;
        }
        let id = self.preds.len() as u32;
        self.preds.push(p.clone());
        self.pred_ids.insert(p.clone(), id);
        id
    }

    pub fn constant(&mut self, c: &Constant) -> u32 {
        if let Some(&id) = self.const_ids.get(c) {
            return id;
        }
        let id = self.consts.len() as u32;
        self.consts.push(c.clone());
        self.const_ids.insert(c.clone(), id);
        id
    }

    pub fn find_pred(&self, p: &Predicate) -> Option<u32> {
        self.pred_ids.get(p).copied()
    }

    pub fn find_const(&self, c: &Constant) -> Option<u32> {
        self.const_ids.get(c).copied()
    }
}

fn hash_slice(key: &[u32]) -> u64 {
    let mut h = FxHasher::default();
    for &k in key {
        h.write_u32(k);
    }
    h.finish()
}

fn hash_masked(args: &[u32], mask: u32) -> u64 {
    let mut h = FxHasher::default();
    for (i, &a) in args.iter().enumerate() {
        if mask & (1 << i) != 0 {
            h.write_u32(a);
        }
    }
    h.finish()
}

fn masked_eq(args: &[u32], mask: u32, key: &[u32]) -> bool {
    let mut k = key.iter();
    args.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).all(|(_, a)| k.next() == Some(a))
}

fn same_on(a: &[u32], b: &[u32], mask: u32) -> bool {
    a.iter().zip(b).enumerate().all(|(i, (x, y))| mask & (1 << i) == 0 || x == y)
}

/// Hash index on a fixed set of argument positions. Each entry is keyed by
/// the masked arguments of its first fact.
#[derive(Debug, Clone)]
struct Index {
    mask: u32,
    map: HashTable<(FactId, Vec<FactId>)>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Relation {
    pub ids: Vec<FactId>,
    indexes: Vec<Index>,
}

impl Relation {
    pub fn ensure_index(&mut self, mask: u32) {
        if !self.indexes.iter().any(|i| i.mask == mask) {
            self.indexes.push(Index { mask, map: HashTable::new() });
        }
    }
}

/// All facts, keyed by `[pred, args...]` and stored back to back.
#[derive(Debug, Clone)]
pub(crate) struct FactStore {
    arena: Vec<u32>,
    starts: Vec<usize>,
    lookup: HashTable<FactId>,
    pub relations: Vec<Relation>,
    pub rank: Vec<u32>,
}

impl Default for FactStore {
    fn default() -> Self {
        FactStore {
            arena: Vec::new(),
            starts: vec![0],
            lookup: HashTable::new(),
            relations: Vec::new(),
            rank: Vec::new(),
        }
    }
}

impl FactStore {
    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn ensure_pred(&mut self, pred: u32) {
        if self.relations.len() <= pred as usize {
            self.relations.resize_with(pred as usize + 1, Relation::default);
        }
    }

    fn key(&self, id: FactId) -> &[u32] {
        &self.arena[self.starts[id as usize]..self.starts[id as usize + 1]]
    }

    pub fn args_of(&self, id: FactId) -> &[u32] {
        &self.key(id)[1..]
    }

    pub fn find(&self, key: &[u32]) -> Option<FactId> {
        self.lookup.find(hash_slice(key), |&id| self.key(id) == key).copied()
    }

    /// Facts of `pred` whose masked positions equal `key`. The index must exist.
    pub fn lookup(&self, pred: u32, mask: u32, key: &[u32]) -> &[FactId] {
        let Some(rel) = self.relations.get(pred as usize) else {
            return &[];
        };
        let index = rel.indexes.iter().find(|i| i.mask == mask).expect("index registered at compile time");
        index
            .map
            .find(hash_slice(key), |(rep, _)| masked_eq(self.args_of(*rep), mask, key))
            .map_or(&[], |(_, ids)| ids.as_slice())
    }

    /// Inserts a fact given as `[pred, args...]`; returns `None` if present.
    pub fn insert(&mut self, key: &[u32], rank: u32) -> Option<FactId> {
        let hash = hash_slice(key);
        if self.find(key).is_some() {
            return None;
        }
        let id = self.len() as FactId;
        self.arena.extend_from_slice(key);
        self.starts.push(self.arena.len());
        self.rank.push(rank);
        let (pred, args) = (key[0], &key[1..]);
        self.ensure_pred(pred);
        let (arena, starts) = (&self.arena, &self.starts);
        let args_of = |f: FactId| &arena[starts[f as usize] + 1..starts[f as usize + 1]];
        let rel = &mut self.relations[pred as usize];
        rel.ids.push(id);
        for index in &mut rel.indexes {
            let mask = index.mask;
            let h = hash_masked(args, mask);
            match index.map.find_mut(h, |(rep, _)| same_on(args_of(*rep), args, mask)) {
                Some((_, ids)) => ids.push(id),
                None => {
                    index.map.insert_unique(h, (id, vec![id]), |(rep, _)| hash_masked(args_of(*rep), mask));
                }
            }
        }
        self.lookup.insert_unique(hash, id, |&f| hash_slice(&arena[starts[f as usize]..starts[f as usize + 1]]));
        Some(id)
    }

    pub fn to_fact(&self, interner: &Interner, id: FactId) -> Fact {
        let key = self.key(id);
        Fact::new(
            interner.preds[key[0] as usize].clone(),
            key[1..].iter().map(|&c| interner.consts[c as usize].clone()).collect(),
        )
        .expect("stored facts respect arity")
    }

    pub fn key_of(&self, interner: &Interner, fact: &Fact) -> Option<Vec<u32>> {
        let mut key = Vec::with_capacity(fact.args().len() + 1);
        key.push(interner.find_pred(fact.predicate())?);
        for c in fact.args() {
            key.push(interner.find_const(c)?);
        }
        Some(key)
    }
}
