/* tslint:disable */
/* eslint-disable */

/**
 * A field that evolves as `r ← α r + β ε` each time `step` is called.
 */
export class FieldAnimation {
    free(): void;
    [Symbol.dispose](): void;
    alpha(): number;
    constructor(n_lat: number, n_lon: number, kappa: number, tau: number, gamma: number, truncation: number, dt_hours: number, eta_hours: number, seed: bigint);
    step(): void;
    steps(): number;
    values(): Float64Array;
}

/**
 * Correlation `c(θ)/c(0)` at `n` angles evenly spaced on `[0, π]`.
 */
export function correlation_curve(kappa: number, tau: number, gamma: number, truncation: number, n: number): Float64Array;

/**
 * One field draw on an `n_lat × n_lon` grid, row-major from the southern
 * row.
 */
export function sample_field(n_lat: number, n_lon: number, kappa: number, tau: number, gamma: number, truncation: number, seed: bigint): Float64Array;

/**
 * `C_l` for `l = 0..=truncation`.
 */
export function spectrum_curve(kappa: number, tau: number, gamma: number, truncation: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_fieldanimation_free: (a: number, b: number) => void;
    readonly correlation_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly fieldanimation_alpha: (a: number) => number;
    readonly fieldanimation_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number];
    readonly fieldanimation_step: (a: number) => void;
    readonly fieldanimation_steps: (a: number) => number;
    readonly fieldanimation_values: (a: number) => [number, number];
    readonly sample_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
    readonly spectrum_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
