#![allow(dead_code)]

/// Small deterministic generator so fixtures do not depend on an RNG crate.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[(self.next_u64() % items.len() as u64) as usize]
    }
}

/// Outage-like table: `cause = storm` adds 200 minutes, `size` is numeric
/// with many distinct values, `month` splits the rows in time.
pub fn outage_csv(n: usize, seed: u64) -> String {
    let mut rng = Lcg::new(seed);
    let mut out = String::from("region,cause,size,month,minutes\n");
    for _ in 0..n {
        let region = rng.pick(&["north", "south", "east"]);
        let cause = rng.pick(&["storm", "tree", "animal"]);
        let size = (rng.uniform() * 10_000.0).round() / 100.0;
        let month = 1 + rng.next_u64() % 12;
        let minutes = 100.0 + if cause == "storm" { 200.0 } else { 0.0 } + 20.0 * rng.uniform();
        out.push_str(&format!("{region},{cause},{size},2020-{month:02},{minutes:.2}\n"));
    }
    out
}
