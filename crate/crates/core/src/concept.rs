/// A p-concept on `[0, 2π)`: the expected label at each input.
pub trait Concept {
    fn value(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Concept for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}
