use crate::instance::{parse_instance, PreferenceInstance};

pub(crate) fn i2() -> PreferenceInstance {
    parse_instance(include_str!("../fixtures/I2.txt")).unwrap()
}

pub(crate) fn i3() -> PreferenceInstance {
    parse_instance(include_str!("../fixtures/I3.txt")).unwrap()
}
