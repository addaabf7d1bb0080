#![allow(dead_code)]

pub mod fake_server;
pub mod instances;
pub mod oracle;
pub mod project;
