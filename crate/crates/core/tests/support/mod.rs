#![allow(dead_code)]

pub mod info_oracle;
pub mod lp_oracle;
