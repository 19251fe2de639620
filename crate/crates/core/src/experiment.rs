//! Coupling-strength sweeps with Poissonian counting noise.
