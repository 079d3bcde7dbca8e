/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fieldanimation_free: (a: number, b: number) => void;
export const correlation_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const fieldanimation_alpha: (a: number) => number;
export const fieldanimation_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number];
export const fieldanimation_step: (a: number) => void;
export const fieldanimation_steps: (a: number) => number;
export const fieldanimation_values: (a: number) => [number, number];
export const sample_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
export const spectrum_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
