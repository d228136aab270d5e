#![no_main]

use enomr::config::parse_mesh_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(meshes) = parse_mesh_list(text) {
        assert!(!meshes.is_empty());
        let again = meshes.iter().map(|k| format!("1/{k}")).collect::<Vec<_>>().join(",");
        assert_eq!(parse_mesh_list(&again).unwrap(), meshes);
    }
});
