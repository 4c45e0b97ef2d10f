//! Certification of generalized Levi-form convexity conditions on real
//! hypersurfaces of `C^n`.
//!
//! * [`expr`]: defining-function expressions and their Wirtinger jets.
//! * [`geometry`]: metrics, tangential frames, Levi matrices, eigenvalues.
//! * [`certify`]: Z(q) / weak Z(q) decisions, Υ fields, reports.
//! * [`domains`]: builtin domains, smooth maximum, boundary sampling.
//! * [`mkh`]: numerical check of the flat Morrey-Kohn-Hormander identity.

pub mod certify;
pub mod domains;
pub mod expr;
pub mod geometry;
pub mod mkh;

pub use certify::{Branch, Certificate, CertificationReport, Verdict};
pub use domains::DomainSpec;
pub use expr::{parse_expr, DefiningExpr, Jet2};
pub use geometry::{levi_form_at, LeviData};
