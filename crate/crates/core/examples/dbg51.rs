use fockbench::autgroup::*;
use fockbench::cmatrix::*;
use fockbench::fock::TruncatedFock;
use fockbench::rowcon::*;
use fockbench::transform::*;

fn main() {
    let nmax = 10usize;
    let fock = TruncatedFock::new(1, nmax);
    let t = RowContraction::from_scalars(&[c64(0.6, 0.0)]).unwrap();
    let x = JUnitary::mobius(&[c64(-0.6, 0.0)]).unwrap();
    let tp = apply_inverse_automorphism(&x, &t).unwrap();
    let u = implementing_unitary(&x, &fock);
    let th_t = char_function(&t, 1.0, &fock).unwrap().mat;
    let th_tp = char_function(&tp, 1.0, &fock).unwrap().mat;
    let transported = &u * &th_t * u.adjoint();
    println!("Theta_T' col0:      {:?}", th_tp.column(0).rows(0,5).iter().map(|z| z.re).collect::<Vec<_>>());
    println!("U Th U^H col0:      {:?}", transported.column(0).rows(0,5).iter().map(|z| z.re).collect::<Vec<_>>());
    println!("U^H Th U col0:      {:?}", (u.adjoint() * &th_t * &u).column(0).rows(0,5).iter().map(|z| z.re).collect::<Vec<_>>());
    // theta' expected taylor of (z-t')/(1-t'z)
    let tpv = 0.8823529411764706f64;
    let mut exp = vec![-tpv];
    for k in 1..5 { exp.push((1.0-tpv*tpv)*tpv.powi(k-1)); }
    println!("taylor b_t':        {exp:?}");
}
