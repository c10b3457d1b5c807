/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const barrier_recovery: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const double_s: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const scenario_names: () => [number, number];
export const simulation_new: (a: number, b: number, c: bigint, d: number) => [number, number, number];
export const simulation_step: (a: number) => [number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
