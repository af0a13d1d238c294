// Content-addressed caching of expensive results.

use rotgyro::cache::{cache_key, Cache};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("rotgyro-cache-example-{}", std::process::id()));
    let cache = Cache::new(&dir);
    let key = cache_key(&[("kind", b"demo"), ("g", &0.5f64.to_le_bytes())]);
    let first = cache.get_or_insert_with(&key, || {
        println!("miss: computing");
        Ok(vec![1.0 / 3.0, std::f64::consts::PI])
    })?;
    let second = cache.get_or_insert_with(&key, || unreachable!("stored above"))?;
    assert_eq!(first, second);
    println!("hit: {second:?} from {}", cache.path_for(&key).display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
