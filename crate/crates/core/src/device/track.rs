/// One racetrack: a row of bit cells moved past fixed access ports.
///
/// Cells are stored by home coordinate. Port `p` sits just before the first
/// cell of segment `p`, so at offset `k` (1 ≤ k ≤ interport) it faces cell
/// `k - 1` of its segment. Offsets are bounded by the overflow region of
/// `interport` cells at each end.
#[derive(Clone, Debug)]
pub struct Track {
    cells: Vec<u64>,
    offset: i64,
    ports: u32,
    interport: u32,
    population: u64,
}

impl Track {
    pub fn new(ports: u32, interport: u32) -> Self {
        assert!(ports > 0 && interport > 0);
        let storage = Self::storage_len(ports, interport);
        Track {
            cells: vec![0; storage.div_ceil(64)],
            offset: 0,
            ports,
            interport,
            population: 0,
        }
    }

    fn storage_len(ports: u32, interport: u32) -> usize {
        // left overflow (interport + 1 cells) followed by the data segments
        (interport as usize + 1) + ports as usize * interport as usize
    }

    pub fn ports(&self) -> u32 {
        self.ports
    }

    pub fn interport(&self) -> u32 {
        self.interport
    }

    pub fn length_bits(&self) -> u64 {
        self.ports as u64 * self.interport as u64
    }

    /// Home position of each port, in data-cell coordinates.
    pub fn port_positions(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.ports).map(|p| p as i64 * self.interport as i64 - 1)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub(crate) fn set_offset(&mut self, offset: i64) {
        debug_assert!(offset.abs() <= self.interport as i64);
        self.offset = offset;
    }

    #[inline]
    fn under_port(&self, port: u32) -> usize {
        ((port as i64 + 1) * self.interport as i64 + self.offset) as usize
    }

    #[inline]
    fn home_index(&self, segment: u32, cell: u32) -> usize {
        (self.interport as usize + 1) + segment as usize * self.interport as usize + cell as usize
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        (self.cells[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    fn put(&mut self, i: usize, v: bool) {
        if v {
            self.cells[i / 64] |= 1 << (i % 64);
        } else {
            self.cells[i / 64] &= !(1 << (i % 64));
        }
    }

    pub(crate) fn read_port(&self, port: u32) -> bool {
        self.get(self.under_port(port))
    }

    pub(crate) fn write_port(&mut self, port: u32, v: bool) {
        let i = self.under_port(port);
        match (self.get(i), v) {
            (false, true) => self.population += 1,
            (true, false) => self.population -= 1,
            _ => {}
        }
        self.put(i, v);
    }

    /// Uncounted inspection of cell `cell` of segment `segment`.
    pub fn peek(&self, segment: u32, cell: u32) -> bool {
        self.get(self.home_index(segment, cell))
    }

    /// Moves one skyrmion within the stored cells; population is unchanged.
    pub(crate) fn relocate(&mut self, segment: u32, from: u32, to: u32) -> bool {
        let (a, b) = (self.home_index(segment, from), self.home_index(segment, to));
        if !self.get(a) || self.get(b) {
            return false;
        }
        self.put(a, false);
        self.put(b, true);
        true
    }

    /// Test-only direct placement of a cell value (population kept consistent).
    pub fn poke(&mut self, segment: u32, cell: u32, v: bool) {
        let i = self.home_index(segment, cell);
        match (self.get(i), v) {
            (false, true) => self.population += 1,
            (true, false) => self.population -= 1,
            _ => {}
        }
        self.put(i, v);
    }

    /// Recount of skyrmions from the cells.
    pub fn count_cells(&self) -> u64 {
        self.cells.iter().map(|c| c.count_ones() as u64).sum()
    }
}
