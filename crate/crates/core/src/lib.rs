pub mod density;
pub mod dynlab;
pub mod endo;
pub mod liealg;
pub mod nilgroup;
pub mod ratcore;
