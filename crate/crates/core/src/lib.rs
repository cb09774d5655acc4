pub mod cli;
pub mod error;
pub mod instances;
pub mod norms;
pub mod numeric;
pub mod oracle;
pub mod planar;
pub mod tour;
pub mod transportation;
pub mod tunneling;
