//! CM points on the modular curve of level 32 mapped to y^2 = x^3 - x in
//! elliptic-log coordinates, Galois traces to quadratic subfields, the
//! distribution relations they satisfy, and recognition of the resulting
//! algebraic points.

use super::classes::HeegnerClasses;
use super::modular::{CPoint, ModularContext};
use super::HeegnerError;
use crate::classgroup::divisors;
use crate::ntheory::{jacobi_i64, SquarefreeProduct};
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

/// The full set of conjugate CM points for one n, in elliptic-log form.
pub struct CMPoints {
    pub ctx: SquarefreeProduct,
    pub classes: HeegnerClasses,
    pub mc: ModularContext,
    /// Elliptic log of z_t on y^2 = x^3 - x, indexed by ideal class.
    pub z: Vec<Complex>,
}

impl CMPoints {
    pub fn build(ctx: &SquarefreeProduct, digits: u32) -> Result<Self, HeegnerError> {
        let classes = HeegnerClasses::build(ctx)?;
        let mc = ModularContext::new(digits, classes.min_height() * 0.95)?;
        let mut z = Vec::with_capacity(classes.reps.len());
        for rep in &classes.reps {
            let tau = classes.tau(rep.index, mc.prec);
            let zf = mc.map_to_main_curve(&tau)?;
            let zt = mc.torsion_log(rep.norm);
            z.push(mc.reduce_main(&(zf + zt)));
        }
        Ok(CMPoints {
            ctx: ctx.clone(),
            classes,
            mc,
            z,
        })
    }

    /// Coset representatives of the class group modulo the class of the
    /// ramified prime above 2, with the specific structure that makes the
    /// trace relations exact (only used when n = 3 mod 4).
    pub fn transversal(&self) -> Result<Vec<usize>, HeegnerError> {
        let ram = self.classes.ramified_two();
        let h = self.classes.snap.class_number;
        let p0 = self.ctx.primes[0];
        let phi: Vec<usize> = if p0 % 8 == 3 {
            // union of ambiguous-class translates of the principal genus
            let mut phi = Vec::new();
            for e in divisors(self.ctx.n / p0) {
                let s = self.classes.ambiguous(e);
                for &q in &self.classes.squares {
                    phi.push(self.classes.mul(s, q));
                }
            }
            phi
        } else {
            // p0 = 7 mod 8: products of a transversal of A / 2A with a
            // transversal of 2A / <ram>
            if !self.classes.squares.contains(&ram) {
                return Err(HeegnerError::NotApplicable(
                    "ramified class is not a square; class-group condition fails".into(),
                ));
            }
            let phi0 = self.squares_transversal()?;
            let psi = self.genus_transversal();
            let mut phi = Vec::new();
            for &s in &psi {
                for &t in &phi0 {
                    phi.push(self.classes.mul(s, t));
                }
            }
            phi
        };
        let mut seen = phi.clone();
        seen.sort_unstable();
        seen.dedup();
        let expected = if ram == self.classes.identity() { h } else { h / 2 };
        if seen.len() != phi.len() || phi.len() != expected {
            return Err(HeegnerError::ClassRep(
                "transversal construction collided; class-group structure unexpected".into(),
            ));
        }
        Ok(phi)
    }

    /// Transversal of 2A modulo the subgroup generated by the ramified class.
    fn squares_transversal(&self) -> Result<Vec<usize>, HeegnerError> {
        let ram = self.classes.ramified_two();
        let mut out: Vec<usize> = Vec::new();
        let mut covered: Vec<usize> = Vec::new();
        for &q in &self.classes.squares {
            if covered.contains(&q) {
                continue;
            }
            out.push(q);
            covered.push(q);
            covered.push(self.classes.mul(q, ram));
        }
        Ok(out)
    }

    /// Transversal of A modulo the principal genus 2A.
    fn genus_transversal(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        let mut covered: Vec<usize> = Vec::new();
        for i in 0..self.classes.snap.class_number {
            if covered.contains(&i) {
                continue;
            }
            out.push(i);
            for &q in &self.classes.squares {
                covered.push(self.classes.mul(i, q));
            }
        }
        out
    }

    /// Trace y_d as an elliptic log: the sum over the kernel of the genus
    /// character for n = 1 mod 4, or the character-weighted transversal sum
    /// for n = 3 mod 4.
    pub fn trace_log(&self, d: u64) -> Result<Complex, HeegnerError> {
        let mut s = Complex::new(self.mc.prec);
        if self.ctx.n % 4 == 1 {
            for i in 0..self.z.len() {
                if self.classes.chi_genus(d, i) == 1 {
                    s += &self.z[i];
                }
            }
        } else {
            for &i in &self.transversal()? {
                if self.classes.chi_imaginary(d, i) == 1 {
                    s += &self.z[i];
                } else {
                    s -= &self.z[i];
                }
            }
        }
        Ok(self.mc.reduce_main(&s))
    }

    /// Base trace y_0 over the principal genus (or over the transversal of
    /// 2A modulo the ramified class when p0 = 7 mod 8).
    pub fn base_trace_log(&self) -> Result<Complex, HeegnerError> {
        let mut s = Complex::new(self.mc.prec);
        if self.ctx.n % 4 == 1 || self.ctx.primes[0] % 8 == 3 {
            for &q in &self.classes.squares {
                s += &self.z[q];
            }
        } else {
            for &q in &self.squares_transversal()? {
                s += &self.z[q];
            }
        }
        Ok(self.mc.reduce_main(&s))
    }

    /// Elliptic log of the chi-component 4 y_m.
    pub fn chi_log(&self) -> Result<Complex, HeegnerError> {
        let m = self.ctx.m.ok_or_else(|| {
            HeegnerError::NotApplicable("no twist index m = 5, 6, 7 mod 8".into())
        })?;
        self.chi_log_for(m)
    }

    /// Elliptic log of 4 y_d for a trace divisor d.
    pub fn chi_log_for(&self, d: u64) -> Result<Complex, HeegnerError> {
        let y = self.trace_log(d)?;
        Ok(self.mc.reduce_main(&(y * 4u32)))
    }

    /// Largest deviation of complex conjugation acting on the conjugates:
    /// conj z_t = z_{t^-1} for n = 1 mod 4, conj z_t = -z_{t^-1} + (1, 0)
    /// for n = 3 mod 4.
    pub fn conjugation_residual(&self) -> Float {
        let mut worst = Float::new(self.mc.prec);
        let z10 = self.mc.z_two_torsion_one();
        for i in 0..self.z.len() {
            let j = self.classes.inv(i);
            let diff = if self.ctx.n % 4 == 1 {
                self.z[i].clone().conj() - &self.z[j]
            } else {
                self.z[i].clone().conj() + &self.z[j] - &z10
            };
            let d = self.mc.lattice_distance_main(&diff);
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Largest deviation of the translation by the ramified prime above 2:
    /// z_{rt} + z_t = 0 or (0,0) for n = 1, 5 mod 8; z_{rt} - z_t = (1,0)
    /// or (-1,0) for n = 7, 3 mod 8.
    pub fn ramified_residual(&self) -> Float {
        let mut worst = Float::new(self.mc.prec);
        let ram = self.classes.ramified_two();
        for i in 0..self.z.len() {
            let j = self.classes.mul(ram, i);
            let diff = match self.ctx.n % 8 {
                1 => self.z[j].clone() + &self.z[i],
                5 => self.z[j].clone() + &self.z[i] - self.mc.z_two_torsion_zero(),
                7 => self.z[j].clone() - &self.z[i] - self.mc.z_two_torsion_one(),
                _ => self.z[j].clone() - &self.z[i] - self.mc.z_two_torsion_minus_one(),
            };
            let d = self.mc.lattice_distance_main(&diff);
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Residual of the trace distribution relation: the divisor traces sum
    /// to 2^k times the base trace (with an exact two-torsion term in the
    /// k = 1, n = 5 mod 8 case). Only defined for k >= 1.
    pub fn distribution_residual(&self) -> Result<Float, HeegnerError> {
        let k = self.ctx.k;
        if k == 0 {
            return Err(HeegnerError::NotApplicable(
                "distribution relation needs at least two primes".into(),
            ));
        }
        let p0 = self.ctx.primes[0];
        let y0 = self.base_trace_log()?;
        let mut lhs = Complex::new(self.mc.prec);
        let mut rhs = y0.clone() * (1u32 << k);
        if self.ctx.n % 4 == 1 {
            for d in divisors(self.ctx.n) {
                if d % p0 == 0 {
                    lhs += self.trace_log(d)?;
                }
            }
            if k == 1 && self.classes.squares.len() % 2 == 1 {
                rhs += self.mc.z_two_torsion_zero();
            }
        } else if p0 % 8 == 3 {
            for d in divisors(self.ctx.n) {
                if d % p0 == 0 {
                    lhs += self.trace_log(2 * d)?;
                }
            }
        } else {
            // p0 = 7 mod 8: divisors of 2n with matching prime-count parity,
            // base term y_0 - y_0^beta with beta moving sqrt 2 and sqrt p_i
            let target = (k + 1) % 2;
            for d in divisors(self.ctx.n) {
                if d % p0 != 0 {
                    continue;
                }
                let nu = self.ctx.primes.iter().filter(|&&p| d % p == 0).count();
                if nu % 2 == target % 2 {
                    lhs += self.trace_log(d)?;
                }
                if (nu + 1) % 2 == target % 2 {
                    lhs += self.trace_log(2 * d)?;
                }
            }
            let beta = self.beta_class()?;
            let mut y0b = Complex::new(self.mc.prec);
            for &q in &self.squares_transversal()? {
                y0b += &self.z[self.classes.mul(beta, q)];
            }
            rhs = (y0 - y0b) * (1u32 << k);
        }
        Ok(self.mc.lattice_distance_main(&(lhs - rhs)))
    }

    /// A class acting by -1 on sqrt 2 and on every sqrt p_i, i >= 1.
    fn beta_class(&self) -> Result<usize, HeegnerError> {
        'outer: for (i, rep) in self.classes.reps.iter().enumerate() {
            let a = rep.norm as i64;
            if a == 1 || jacobi_i64(2, a) != -1 {
                continue;
            }
            for &p in &self.ctx.primes[1..] {
                if jacobi_i64(a, p as i64) != -1 {
                    continue 'outer;
                }
            }
            return Ok(i);
        }
        Err(HeegnerError::ClassRep(
            "no class realizes the genus element moving sqrt 2 and all sqrt p_i".into(),
        ))
    }

    /// Recognize the point at an elliptic log as an exact algebraic point
    /// with x rational and y a rational multiple of sqrt(m*). Returns None
    /// for the point at infinity.
    pub fn recognize(
        &self,
        zlog: &Complex,
        m_star: i64,
    ) -> Result<Option<(Rational, Rational)>, HeegnerError> {
        let digits = self.mc.digits;
        let inf_tol = self.mc.tolerance(digits - digits / 4);
        if self.mc.lattice_distance_main(zlog) < inf_tol {
            return Ok(None);
        }
        let (x, y) = match self.mc.point_main_curve(zlog) {
            CPoint::Infinity => return Ok(None),
            CPoint::Affine(x, y) => (x, y),
        };
        let imag_tol = self.mc.tolerance(digits / 2);
        // x has denominator e^2, y has e^3: give v more headroom; the
        // tolerance stays well below 1 / (bound * next-convergent) so a
        // penultimate convergent of an out-of-range rational is rejected
        let max_den = Integer::from(10).pow(digits / 3);
        let max_den_v = Integer::from(10).pow(digits / 2);
        let rec_tol = self.mc.tolerance(digits * 3 / 4);
        if x.imag().clone().abs() > imag_tol {
            return Err(HeegnerError::Recognition(format!(
                "x not real: imaginary part {:e}",
                x.imag().to_f64()
            )));
        }
        let xr = recognize_rational(x.real(), &max_den, &rec_tol).ok_or_else(|| {
            HeegnerError::Recognition("x does not reconstruct as a rational".into())
        })?;
        let sqrt_m = Float::with_val(self.mc.prec, m_star.unsigned_abs()).sqrt();
        let v_float = if m_star > 0 {
            if y.imag().clone().abs() > imag_tol {
                return Err(HeegnerError::Recognition("y not real".into()));
            }
            y.real().clone() / sqrt_m
        } else {
            if y.real().clone().abs() > imag_tol {
                return Err(HeegnerError::Recognition("y not purely imaginary".into()));
            }
            y.imag().clone() / sqrt_m
        };
        let v = recognize_rational(&v_float, &max_den_v, &rec_tol).ok_or_else(|| {
            HeegnerError::Recognition("y / sqrt(m*) does not reconstruct as a rational".into())
        })?;
        // exact curve identity: m* v^2 = x^3 - x
        let lhs = v.clone() * &v * Rational::from(m_star);
        let rhs = xr.clone() * &xr * &xr - &xr;
        if lhs != rhs {
            return Err(HeegnerError::Recognition(
                "reconstructed point fails the curve equation".into(),
            ));
        }
        Ok(Some((xr, v)))
    }
}

/// Continued-fraction rational reconstruction with a denominator cap.
pub fn recognize_rational(f: &Float, max_den: &Integer, tol: &Float) -> Option<Rational> {
    let prec = f.prec();
    let (mut pm1, mut qm1) = (Integer::from(1), Integer::from(0));
    let a0 = f.clone().floor().to_integer()?;
    let (mut p, mut q) = (a0.clone(), Integer::from(1));
    let mut frac = f.clone() - Float::with_val(prec, &a0);
    for _ in 0..4000 {
        let approx = Float::with_val(prec, &p) / Float::with_val(prec, &q);
        if (approx - f).abs() < *tol {
            return Some(Rational::from((p, q)));
        }
        if q > *max_den {
            return None;
        }
        if frac.clone().abs() < Float::with_val(prec, 1e-300) {
            return None;
        }
        frac = frac.recip();
        let a = frac.clone().floor().to_integer()?;
        frac -= Float::with_val(prec, &a);
        let p2 = a.clone() * &p + &pm1;
        let q2 = a * &q + &qm1;
        pm1 = std::mem::replace(&mut p, p2);
        qm1 = std::mem::replace(&mut q, q2);
    }
    None
}
