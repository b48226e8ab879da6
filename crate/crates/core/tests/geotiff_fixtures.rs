mod common;

use common::fixture;
use parcelsight::raster_io::{parse_geotiff, read_geotiff, write_geotiff, ByteOrder, GeoRaster, TiffCompression, TiffWriteOptions};
use parcelsight::Error;
use serde_json::Value;

fn dump() -> serde_json::Map<String, Value> {
    let text = std::fs::read_to_string(fixture("geotiff/dump.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn rgb_of(r: &GeoRaster) -> Vec<u8> {
    let b = r.band_count();
    r.pixels().chunks(b).flat_map(|p| p[..3].to_vec()).collect()
}

#[test]
fn every_fixture_matches_reference_reader() {
    let dump = dump();
    assert!(dump.len() >= 7);
    for (name, d) in &dump {
        let r = read_geotiff(fixture(&format!("geotiff/{name}"))).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(r.width(), d["width"].as_u64().unwrap() as usize, "{name}");
        assert_eq!(r.height(), d["height"].as_u64().unwrap() as usize, "{name}");
        // extra bands (alpha) are dropped on read
        assert!(d["samples_per_pixel"].as_u64().unwrap() >= 3);
        assert_eq!(r.band_count(), 3, "{name}");
        let want: Vec<u8> = d["rgb"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as u8).collect();
        assert_eq!(rgb_of(&r), want, "{name}: pixel data");

        let t = r.transform();
        let e = &d["expected_transform"];
        let close = |a: f64, k: &str| (a - e[k].as_f64().unwrap()).abs() < 1e-9;
        assert!(close(t.origin_x, "origin_x"), "{name}: {t:?}");
        assert!(close(t.origin_y, "origin_y"), "{name}: {t:?}");
        assert!(close(t.pixel_size_x, "pixel_size_x"), "{name}: {t:?}");
        assert!(close(t.pixel_size_y, "pixel_size_y"), "{name}: {t:?}");
        assert_eq!(t.crs_code as u64, e["crs_code"].as_u64().unwrap(), "{name}");
    }
}

#[test]
fn fixture_set_covers_layout_variants() {
    let dump = dump();
    let any = |f: &dyn Fn(&Value) -> bool| dump.values().any(f);
    assert!(any(&|d| d["tiled"] == true));
    assert!(any(&|d| d["byteorder"] == ">"));
    assert!(any(&|d| d["compression"] == 8));
    assert!(any(&|d| d["predictor"] == 2));
    assert!(any(&|d| d["pixel_is_point"] == true));
    assert!(any(&|d| d["samples_per_pixel"] == 4));
}

#[test]
fn missing_tiepoint_names_the_tag() {
    let err = read_geotiff(fixture("geotiff/no_tiepoint.tif")).unwrap_err();
    assert!(err.to_string().contains("33922"), "{err}");
}

#[test]
fn truncated_file_is_a_format_error() {
    let bytes = std::fs::read(fixture("geotiff/geo_4x4.tif")).unwrap();
    assert!(parse_geotiff(&bytes[..6]).is_err());
    assert!(matches!(parse_geotiff(b"not a tiff at all"), Err(Error::Format(_))));
}

#[test]
fn reencoding_preserves_pixels_and_transform() {
    for name in ["geo_4x4.tif", "geo_4x4_be.tif", "strips_predictor.tif", "tiled_be.tif", "pixel_is_point.tif"] {
        let r = read_geotiff(fixture(&format!("geotiff/{name}"))).unwrap();
        for byte_order in [ByteOrder::Little, ByteOrder::Big] {
            for compression in [TiffCompression::None, TiffCompression::Deflate] {
                let opts = TiffWriteOptions { byte_order, compression, rows_per_strip: 3 };
                let back = parse_geotiff(&write_geotiff(&r, &opts).unwrap()).unwrap();
                assert_eq!(back, r, "{name} {opts:?}");
            }
        }
    }
}
