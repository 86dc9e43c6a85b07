//! Loads a configuration from TOML text plus environment-style overrides
//! and prints the resolved document.

use ugsel::config::Config;

fn main() -> ugsel::Result<()> {
    let text = "seed = 11\n[gates]\nvariant = \"ssal\"\nkappa1 = 0.6\n";
    let dir = std::env::temp_dir().join("ugsel-config-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text)?;

    let overrides = [("UGSEL_TILING__SCALE".to_string(), "4".to_string())];
    let cfg = Config::load_with(Some(&path), overrides)?;
    print!("{}", cfg.to_toml_string()?);
    Ok(())
}
