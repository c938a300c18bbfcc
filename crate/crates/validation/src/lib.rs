//! Hosts the `acceptance` test target; see `tests/acceptance.rs`. The
//! criteria themselves live in `quantile_stderr::acceptance`.
