/* tslint:disable */
/* eslint-disable */

/**
 * Loss of every training condition between the degraded and clean scene,
 * plus PU-PSNR and PU-SSIM of the degraded image, as JSON.
 */
export function compare_conditions(size: number, seed: number, exposure: number, task: string, peak: number): string;

/**
 * Renders the clean (left) and degraded (right) synthetic scene side by
 * side as RGBA bytes, with encoded values mapped straight to 8-bit.
 * The result is `2 * size` wide and `size` high.
 */
export function render_scene(size: number, seed: number, exposure: number, task: string, encoding: string, peak: number): Uint8Array;

/**
 * Edge length actually used by [`render_scene`] for a requested size.
 */
export function scene_size(size: number): number;

/**
 * Transfer curves as a flat array of rows
 * `[luminance, linear, mulaw, pq, pu21]`.
 */
export function transfer_curves(points: number, mu: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compare_conditions: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly render_scene: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly scene_size: (a: number) => number;
    readonly transfer_curves: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
