//! Per-item dwell-time quantile profiles and per-user weekly click windows.
//!
//! Profiles are built in the statistics pass and frozen for labeling. Item
//! histories are held at `f32` precision, which is also how they are
//! persisted, so a reloaded store answers every query identically.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::binio::*;
use crate::error::{Error, Result};
use crate::ingest::InteractionEvent;

/// Records kept exactly per item before switching to the sketch.
pub const EXACT_LIMIT: usize = 4096;
pub const DEFAULT_SKETCH_EPS: f64 = 0.01;
pub const WEEK_SECONDS: i64 = 7 * 86_400;
pub const LIGHT_USER_CLICKS: usize = 7;

pub const PROFILE_MAGIC: &[u8; 4] = b"VRPF";
pub const PROFILE_VERSION: u32 = 1;

/// 1-based nearest-rank index `ceil(p * n)`, clamped to `[1, n]`. Products
/// within 1e-9 of an integer are not bumped up by rounding noise
/// (`0.1 * 30` is rank 3, not 4).
pub fn nearest_rank(p: f64, n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let r = p.clamp(0.0, 1.0) * n as f64;
    let rounded = r.round();
    let r = if (r - rounded).abs() <= 1e-9 * (n as f64).max(1.0) {
        rounded
    } else {
        r.ceil()
    };
    (r as u64).clamp(1, n)
}

/// Deterministic mergeable rank sketch. Level `h` holds items of weight
/// `2^h`; a full level is sorted and every other item (alternating offset)
/// is promoted. Each compaction at level `h` moves any rank by at most
/// `2^h`, which keeps the total rank error below `levels / (2k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSketch {
    k: usize,
    n: u64,
    levels: Vec<Vec<f32>>,
    odd_offset: Vec<bool>,
}

impl RankSketch {
    pub fn with_eps(eps: f64) -> Self {
        let k = (8.0 / eps.clamp(1e-4, 0.5)).ceil() as usize;
        Self::with_k(k)
    }

    pub fn with_k(k: usize) -> Self {
        RankSketch {
            k: k.max(2),
            n: 0,
            levels: vec![Vec::new()],
            odd_offset: vec![false],
        }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn insert(&mut self, v: f32) {
        self.levels[0].push(v);
        self.n += 1;
        self.compact_from(0);
    }

    pub fn merge(&mut self, other: &RankSketch) {
        while self.levels.len() < other.levels.len() {
            self.levels.push(Vec::new());
            self.odd_offset.push(false);
        }
        for (mine, theirs) in self.levels.iter_mut().zip(&other.levels) {
            mine.extend_from_slice(theirs);
        }
        self.n += other.n;
        self.compact_from(0);
    }

    fn compact_from(&mut self, start: usize) {
        let cap = 2 * self.k;
        let mut h = start;
        while h < self.levels.len() {
            if self.levels[h].len() >= cap {
                let mut buf = std::mem::take(&mut self.levels[h]);
                buf.sort_by(f32::total_cmp);
                // odd leftovers stay behind so total weight is conserved
                if buf.len() % 2 == 1 {
                    let last = buf.pop().unwrap_or_default();
                    self.levels[h].push(last);
                }
                let offset = usize::from(self.odd_offset[h]);
                self.odd_offset[h] = !self.odd_offset[h];
                if h + 1 == self.levels.len() {
                    self.levels.push(Vec::new());
                    self.odd_offset.push(false);
                }
                let promoted: Vec<f32> = buf.iter().skip(offset).step_by(2).copied().collect();
                self.levels[h + 1].extend(promoted);
            }
            h += 1;
        }
    }

    fn weighted(&self) -> Vec<(f32, u64)> {
        let mut out: Vec<(f32, u64)> = self
            .levels
            .iter()
            .enumerate()
            .flat_map(|(h, lvl)| lvl.iter().map(move |&v| (v, 1u64 << h)))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    fn write(&self, w: &mut impl Write) -> Result<()> {
        put_len(w, self.k, "sketch")?;
        put_u64(w, self.n)?;
        put_len(w, self.levels.len(), "sketch")?;
        for (lvl, &odd) in self.levels.iter().zip(&self.odd_offset) {
            put_u8(w, u8::from(odd))?;
            put_len(w, lvl.len(), "sketch")?;
            put_f32s(w, lvl)?;
        }
        Ok(())
    }

    fn read(r: &mut impl Read) -> Result<Self> {
        let k = get_u32(r, "sketch")? as usize;
        let n = get_u64(r, "sketch")?;
        let n_levels = get_u32(r, "sketch")? as usize;
        if k < 2 || n_levels == 0 || n_levels > 64 {
            return Err(Error::format("sketch", format!("bad header k={k} levels={n_levels}")));
        }
        let mut levels = Vec::with_capacity(n_levels);
        let mut odd_offset = Vec::with_capacity(n_levels);
        let mut weight = 0u64;
        for h in 0..n_levels {
            odd_offset.push(get_u8(r, "sketch")? != 0);
            let len = get_u32(r, "sketch")? as usize;
            weight = weight.saturating_add((len as u64) << h);
            levels.push(get_f32s(r, len, "sketch")?);
        }
        if weight != n {
            return Err(Error::format("sketch", format!("weight {weight} != count {n}")));
        }
        Ok(RankSketch {
            k,
            n,
            levels,
            odd_offset,
        })
    }
}

/// Dwell-time record set of one item: exact sorted multiset for small
/// histories, [`RankSketch`] above [`EXACT_LIMIT`] records.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantileEstimator {
    Exact(Vec<f32>),
    Sketch(RankSketch),
}

impl Default for QuantileEstimator {
    fn default() -> Self {
        QuantileEstimator::Exact(Vec::new())
    }
}

impl QuantileEstimator {
    pub fn len(&self) -> u64 {
        match self {
            QuantileEstimator::Exact(v) => v.len() as u64,
            QuantileEstimator::Sketch(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sketch(&self) -> bool {
        matches!(self, QuantileEstimator::Sketch(_))
    }

    pub fn insert(&mut self, v: f32) {
        match self {
            QuantileEstimator::Exact(sorted) => {
                let at = sorted.partition_point(|x| x.total_cmp(&v).is_le());
                sorted.insert(at, v);
                if sorted.len() > EXACT_LIMIT {
                    let mut sk = RankSketch::with_eps(DEFAULT_SKETCH_EPS);
                    for &x in sorted.iter() {
                        sk.insert(x);
                    }
                    *self = QuantileEstimator::Sketch(sk);
                }
            }
            QuantileEstimator::Sketch(sk) => sk.insert(v),
        }
    }

    pub fn merge(&mut self, other: &QuantileEstimator) {
        match (&mut *self, other) {
            (QuantileEstimator::Sketch(a), QuantileEstimator::Sketch(b)) => a.merge(b),
            (QuantileEstimator::Exact(a), QuantileEstimator::Sketch(b)) => {
                let mut sk = b.clone();
                for &x in a.iter() {
                    sk.insert(x);
                }
                *self = QuantileEstimator::Sketch(sk);
            }
            (_, QuantileEstimator::Exact(b)) => {
                for &x in b {
                    self.insert(x);
                }
            }
        }
    }

    fn weighted(&self) -> Vec<(f32, u64)> {
        match self {
            QuantileEstimator::Exact(v) => v.iter().map(|&x| (x, 1)).collect(),
            QuantileEstimator::Sketch(s) => s.weighted(),
        }
    }

    /// Nearest-rank quantile. `None` when empty.
    pub fn quantile(&self, p: f64) -> Option<f32> {
        match self {
            QuantileEstimator::Exact(v) => {
                let r = nearest_rank(p, v.len() as u64);
                (r > 0).then(|| v[r as usize - 1])
            }
            QuantileEstimator::Sketch(_) => select_rank(&self.weighted(), nearest_rank(p, self.len()), None),
        }
    }

    /// Nearest-rank quantile of the record set with one occurrence of
    /// `value` removed. `None` when nothing remains.
    pub fn quantile_excluding(&self, p: f64, value: f32) -> Option<f32> {
        let n = self.len().checked_sub(1)?;
        if n == 0 {
            return None;
        }
        select_rank(&self.weighted(), nearest_rank(p, n), Some(value))
    }
}

fn select_rank(sorted: &[(f32, u64)], rank: u64, exclude: Option<f32>) -> Option<f32> {
    if rank == 0 {
        return None;
    }
    let mut cum = 0u64;
    let mut removed = false;
    for &(v, w) in sorted {
        cum += w;
        if let Some(x) = exclude {
            if !removed && v.total_cmp(&x).is_ge() {
                removed = true;
                cum -= 1;
            }
        }
        if cum >= rank {
            return Some(v);
        }
    }
    sorted.last().map(|x| x.0)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItemDwellProfile {
    pub item_id: String,
    pub estimator: QuantileEstimator,
    pub n_records: u64,
}

impl ItemDwellProfile {
    pub fn new(item_id: impl Into<String>) -> Self {
        ItemDwellProfile {
            item_id: item_id.into(),
            ..Default::default()
        }
    }

    pub fn observe(&mut self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("dwell time {t} must be finite and >= 0")));
        }
        self.estimator.insert(t as f32);
        self.n_records += 1;
        Ok(())
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.estimator
            .quantile(p)
            .map(f64::from)
            .ok_or_else(|| Error::NoData(format!("item {} has no dwell records", self.item_id)))
    }

    /// Nearest-rank P10 of the item's dwell history.
    pub fn p10(&self) -> Result<f64> {
        self.quantile(0.10)
    }

    /// P10 with one record of `t` left out.
    pub fn p10_excluding(&self, t: f64) -> Result<f64> {
        self.estimator
            .quantile_excluding(0.10, t as f32)
            .map(f64::from)
            .ok_or_else(|| Error::NoData(format!("item {} has no other dwell records", self.item_id)))
    }

    pub fn merge(&mut self, other: &ItemDwellProfile) {
        self.estimator.merge(&other.estimator);
        self.n_records += other.n_records;
    }
}

pub fn item_p10(profile: &ItemDwellProfile) -> Result<f64> {
    profile.p10()
}

/// Click timestamps of one user. All clicks are kept; the sliding window is
/// applied when querying, relative to the query time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserActivityProfile {
    pub user_id: String,
    click_timestamps: Vec<i64>,
}

impl UserActivityProfile {
    pub fn new(user_id: impl Into<String>) -> Self {
        UserActivityProfile {
            user_id: user_id.into(),
            click_timestamps: Vec::new(),
        }
    }

    pub fn record_click(&mut self, ts: i64) {
        let at = self.click_timestamps.partition_point(|&x| x <= ts);
        self.click_timestamps.insert(at, ts);
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.click_timestamps
    }

    pub fn total_clicks(&self) -> usize {
        self.click_timestamps.len()
    }

    /// Clicks in `(at - window_s, at]`.
    pub fn clicks_in_window(&self, at: i64, window_s: i64) -> usize {
        let hi = self.click_timestamps.partition_point(|&x| x <= at);
        let lo = self.click_timestamps.partition_point(|&x| x <= at - window_s);
        hi - lo
    }

    pub fn window_size(&self, at: i64) -> usize {
        self.clicks_in_window(at, WEEK_SECONDS)
    }

    /// Fewer than 7 clicks in the trailing week ending at `at`.
    pub fn is_light_user(&self, at: i64) -> bool {
        self.window_size(at) < LIGHT_USER_CLICKS
    }

    pub fn merge(&mut self, other: &UserActivityProfile) {
        let mut all = Vec::with_capacity(self.click_timestamps.len() + other.click_timestamps.len());
        all.extend_from_slice(&self.click_timestamps);
        all.extend_from_slice(&other.click_timestamps);
        all.sort_unstable();
        self.click_timestamps = all;
    }
}

/// Frozen item and user profiles for one training window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileStore {
    pub items: BTreeMap<String, ItemDwellProfile>,
    pub users: BTreeMap<String, UserActivityProfile>,
}

impl ProfileStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every click feeds its item's dwell history and its user's window.
    pub fn observe(&mut self, e: &InteractionEvent) -> Result<()> {
        if !e.clicked {
            return Ok(());
        }
        self.items
            .entry(e.item_id.clone())
            .or_insert_with(|| ItemDwellProfile::new(e.item_id.clone()))
            .observe(e.dwell_time_s)?;
        self.users
            .entry(e.user_id.clone())
            .or_insert_with(|| UserActivityProfile::new(e.user_id.clone()))
            .record_click(e.timestamp);
        Ok(())
    }

    pub fn build<'a>(events: impl IntoIterator<Item = &'a InteractionEvent>) -> Result<Self> {
        let mut store = ProfileStore::new();
        for e in events {
            store.observe(e)?;
        }
        Ok(store)
    }

    /// Folds a shard built over disjoint events into this store.
    pub fn merge(&mut self, other: &ProfileStore) {
        for (id, p) in &other.items {
            self.items
                .entry(id.clone())
                .or_insert_with(|| ItemDwellProfile::new(id.clone()))
                .merge(p);
        }
        for (id, p) in &other.users {
            self.users
                .entry(id.clone())
                .or_insert_with(|| UserActivityProfile::new(id.clone()))
                .merge(p);
        }
    }

    pub fn item(&self, id: &str) -> Option<&ItemDwellProfile> {
        self.items.get(id)
    }

    pub fn user(&self, id: &str) -> Option<&UserActivityProfile> {
        self.users.get(id)
    }

    /// Binary layout (all integers little-endian):
    ///
    /// ```text
    /// "VRPF" | version u32 | seed u64
    /// n_items u32 | n_items x (record_len u32 | item record)
    /// n_users u32 | n_users x (record_len u32 | user record)
    ///
    /// item record: id_len u32 | id | n_records u64 | mode u8
    ///   mode 0 (exact):  count u32 | count x f32, ascending
    ///   mode 1 (sketch): k u32 | n u64 | n_levels u32 |
    ///                    n_levels x (odd_offset u8 | len u32 | len x f32)
    /// user record: id_len u32 | id | count u32 | count x i64, ascending
    /// ```
    pub fn write(&self, w: &mut impl Write, seed: u64) -> Result<()> {
        w.write_all(PROFILE_MAGIC)?;
        put_u32(w, PROFILE_VERSION)?;
        put_u64(w, seed)?;
        put_len(w, self.items.len(), "profiles")?;
        let mut rec = Vec::new();
        for p in self.items.values() {
            rec.clear();
            put_str(&mut rec, &p.item_id, "profiles")?;
            put_u64(&mut rec, p.n_records)?;
            match &p.estimator {
                QuantileEstimator::Exact(v) => {
                    put_u8(&mut rec, 0)?;
                    put_len(&mut rec, v.len(), "profiles")?;
                    put_f32s(&mut rec, v)?;
                }
                QuantileEstimator::Sketch(s) => {
                    put_u8(&mut rec, 1)?;
                    s.write(&mut rec)?;
                }
            }
            put_len(w, rec.len(), "profiles")?;
            w.write_all(&rec)?;
        }
        put_len(w, self.users.len(), "profiles")?;
        for p in self.users.values() {
            rec.clear();
            put_str(&mut rec, &p.user_id, "profiles")?;
            put_len(&mut rec, p.click_timestamps.len(), "profiles")?;
            for &ts in &p.click_timestamps {
                put_i64(&mut rec, ts)?;
            }
            put_len(w, rec.len(), "profiles")?;
            w.write_all(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a store written by [`ProfileStore::write`]; returns it with the
    /// recorded seed.
    pub fn read(r: &mut impl Read) -> Result<(Self, u64)> {
        expect_magic(r, PROFILE_MAGIC, "profiles")?;
        let version = get_u32(r, "profiles")?;
        if version != PROFILE_VERSION {
            return Err(Error::format("profiles", format!("unsupported version {version}")));
        }
        let seed = get_u64(r, "profiles")?;
        let mut store = ProfileStore::new();
        let n_items = get_u32(r, "profiles")?;
        for _ in 0..n_items {
            let len = get_u32(r, "profiles")? as usize;
            let rec = get_bytes(r, len, "profiles")?;
            let mut rec = &rec[..];
            let item_id = get_str(&mut rec, "profiles")?;
            let n_records = get_u64(&mut rec, "profiles")?;
            let estimator = match get_u8(&mut rec, "profiles")? {
                0 => {
                    let count = get_u32(&mut rec, "profiles")? as usize;
                    let v = get_f32s(&mut rec, count, "profiles")?;
                    if v.windows(2).any(|w| w[0].total_cmp(&w[1]).is_gt()) {
                        return Err(Error::format("profiles", format!("item {item_id}: records not sorted")));
                    }
                    QuantileEstimator::Exact(v)
                }
                1 => QuantileEstimator::Sketch(RankSketch::read(&mut rec)?),
                m => return Err(Error::format("profiles", format!("unknown estimator mode {m}"))),
            };
            if estimator.len() != n_records || !rec.is_empty() {
                return Err(Error::format("profiles", format!("item {item_id}: inconsistent record")));
            }
            store.items.insert(
                item_id.clone(),
                ItemDwellProfile {
                    item_id,
                    estimator,
                    n_records,
                },
            );
        }
        let n_users = get_u32(r, "profiles")?;
        for _ in 0..n_users {
            let len = get_u32(r, "profiles")? as usize;
            let rec = get_bytes(r, len, "profiles")?;
            let mut rec = &rec[..];
            let user_id = get_str(&mut rec, "profiles")?;
            let count = get_u32(&mut rec, "profiles")? as usize;
            let mut ts = Vec::with_capacity(count);
            for _ in 0..count {
                ts.push(get_i64(&mut rec, "profiles")?);
            }
            if !rec.is_empty() || ts.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::format("profiles", format!("user {user_id}: inconsistent record")));
            }
            store.users.insert(
                user_id.clone(),
                UserActivityProfile {
                    user_id,
                    click_timestamps: ts,
                },
            );
        }
        Ok((store, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DAY: i64 = 86_400;

    #[test]
    fn single_record() {
        let mut p = ItemDwellProfile::new("i");
        p.observe(7.0).unwrap();
        assert_eq!(p.n_records, 1);
        for q in [0.0, 0.1, 0.5, 1.0] {
            assert_eq!(p.quantile(q).unwrap(), 7.0);
        }
        assert_eq!(item_p10(&p).unwrap(), 7.0);
    }

    #[test]
    fn p10_nearest_rank() {
        let mut p = ItemDwellProfile::new("i");
        for t in (1..=10).map(|k| 10.0 * k as f64) {
            p.observe(t).unwrap();
        }
        assert_eq!(p.n_records, 10);
        assert_eq!(p.p10().unwrap(), 10.0);
        assert_eq!(p.quantile(0.5).unwrap(), 50.0);
        assert_eq!(p.quantile(0.55).unwrap(), 60.0);
    }

    #[test]
    fn nearest_rank_ignores_rounding_noise() {
        assert_eq!(nearest_rank(0.1, 30), 3);
        assert_eq!(nearest_rank(0.1, 10), 1);
        assert_eq!(nearest_rank(0.1, 11), 2);
        assert_eq!(nearest_rank(0.0, 5), 1);
        assert_eq!(nearest_rank(1.0, 5), 5);
    }

    #[test]
    fn empty_profile_has_no_p10() {
        assert!(matches!(ItemDwellProfile::new("i").p10(), Err(Error::NoData(_))));
    }

    #[test]
    fn negative_dwell_rejected() {
        assert!(ItemDwellProfile::new("i").observe(-1.0).is_err());
    }

    #[test]
    fn p10_excluding_self() {
        let mut p = ItemDwellProfile::new("i");
        for t in [5.0, 20.0, 30.0, 40.0] {
            p.observe(t).unwrap();
        }
        // remaining {20,30,40}: rank ceil(0.3) = 1
        assert_eq!(p.p10_excluding(5.0).unwrap(), 20.0);
        assert_eq!(p.p10_excluding(30.0).unwrap(), 5.0);
        let mut single = ItemDwellProfile::new("j");
        single.observe(3.0).unwrap();
        assert!(single.p10_excluding(3.0).is_err());
    }

    #[test]
    fn switches_to_sketch_above_limit() {
        let mut p = ItemDwellProfile::new("i");
        for i in 0..EXACT_LIMIT {
            p.observe(i as f64).unwrap();
        }
        assert!(!p.estimator.is_sketch());
        p.observe(1.0).unwrap();
        assert!(p.estimator.is_sketch());
        assert_eq!(p.n_records, EXACT_LIMIT as u64 + 1);
    }

    #[test]
    fn user_window() {
        let t0 = 1_700_000_000;
        let mut u = UserActivityProfile::new("u");
        u.record_click(t0);
        assert_eq!(u.window_size(t0), 1);
        for k in 1..10 {
            u.record_click(t0 + k * 600);
        }
        assert_eq!(u.window_size(t0 + DAY), 10);

        let mut v = UserActivityProfile::new("v");
        v.record_click(t0);
        v.record_click(t0 + 8 * DAY);
        assert_eq!(v.window_size(t0 + 8 * DAY), 1);
        // window is (at - 7d, at]
        assert_eq!(v.window_size(t0 + 7 * DAY), 0);
        assert_eq!(v.window_size(t0 + 7 * DAY - 1), 1);
    }

    #[test]
    fn light_user_threshold() {
        let t0 = 1_700_000_000;
        let mut u = UserActivityProfile::new("u");
        assert!(u.is_light_user(t0));
        for k in 0..6 {
            u.record_click(t0 + k);
        }
        assert!(u.is_light_user(t0 + 10));
        u.record_click(t0 + 6);
        assert!(!u.is_light_user(t0 + 10));
    }

    #[test]
    fn store_round_trip() {
        let mut store = ProfileStore::new();
        let t0 = 1_700_000_000;
        for i in 0..5000 {
            let t = (i % 97) as f64 * 1.5;
            store
                .observe(&InteractionEvent::click(&format!("u{}", i % 13), "head", t0 + i, t))
                .unwrap();
        }
        store.observe(&InteractionEvent::click("u1", "tail", t0, 9.25)).unwrap();
        store.observe(&InteractionEvent::impression("u99", "tail", t0)).unwrap();
        assert!(store.item("head").unwrap().estimator.is_sketch());
        assert!(store.user("u99").is_none());

        let mut buf = Vec::new();
        store.write(&mut buf, 42).unwrap();
        let (back, seed) = ProfileStore::read(&mut &buf[..]).unwrap();
        assert_eq!(seed, 42);
        assert_eq!(back, store);
        let mut again = Vec::new();
        back.write(&mut again, 42).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn store_rejects_garbage() {
        assert!(ProfileStore::read(&mut &b"XXXX"[..]).is_err());
        let mut buf = Vec::new();
        ProfileStore::build(&[InteractionEvent::click("u", "i", 5, 3.0)])
            .unwrap()
            .write(&mut buf, 0)
            .unwrap();
        buf.truncate(buf.len() - 3);
        assert!(ProfileStore::read(&mut &buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn quantiles_monotone(v in prop::collection::vec(0.0f64..1000.0, 1..300),
                              ps in prop::collection::vec(0.0f64..=1.0, 2..10)) {
            let mut p = ItemDwellProfile::new("i");
            for &t in &v { p.observe(t).unwrap(); }
            let mut ps = ps;
            ps.sort_by(f64::total_cmp);
            let qs: Vec<f64> = ps.iter().map(|&q| p.quantile(q).unwrap()).collect();
            prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn exact_merge_matches_union(a in prop::collection::vec(0.0f64..1000.0, 0..200),
                                     b in prop::collection::vec(0.0f64..1000.0, 0..200)) {
            let build = |v: &[f64]| {
                let mut p = ItemDwellProfile::new("i");
                for &t in v { p.observe(t).unwrap(); }
                p
            };
            let mut merged = build(&a);
            merged.merge(&build(&b));
            let all: Vec<f64> = a.iter().chain(&b).copied().collect();
            let whole = build(&all);
            prop_assert_eq!(&merged, &whole);
        }

        #[test]
        fn light_user_monotone(n in 0usize..20, extra in 0usize..5) {
            let t0 = 1_700_000_000;
            let mut u = UserActivityProfile::new("u");
            for k in 0..n { u.record_click(t0 + k as i64); }
            let before = u.is_light_user(t0 + 100);
            for k in 0..extra { u.record_click(t0 + 50 + k as i64); }
            // more in-window clicks can only turn light into heavy
            prop_assert!(before || !u.is_light_user(t0 + 100));
        }
    }
}
