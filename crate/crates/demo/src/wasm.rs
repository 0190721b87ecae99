use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tower_diagram(params_json: &str, stage: usize) -> Result<String, JsValue> {
    js(crate::tower_diagram(params_json, stage))
}

#[wasm_bindgen]
pub fn construction(params_json: &str, primes: &str, n: usize, m: usize, phi: &str) -> Result<String, JsValue> {
    js(crate::construction(params_json, primes, n, m, phi))
}

#[wasm_bindgen]
pub fn rotation(cf: &str, steps: usize, n0: usize) -> Result<String, JsValue> {
    js(crate::rotation(cf, steps, n0))
}
