pub mod dense_gp;
