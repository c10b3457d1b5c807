/* tslint:disable */
/* eslint-disable */

/**
 * Closed-loop session advanced one planning cycle per call.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    constructor(scenario: string, seed: bigint, candidates: number);
    /**
     * Advances one cycle and returns the frame as JSON.
     */
    step(): string;
}

/**
 * Barrier values driven along the lower bound `(1 - alpha_k) h_{k-1}` plus a fixed margin.
 */
export function barrier_recovery(h0: number, alpha0: number, steps: number, margin: number): string;

/**
 * Goal distance of a jerk-limited speed change, with the sampled speed and acceleration.
 */
export function double_s(v0: number, a0: number, desired_speed: number, jerk: number, horizon: number): string;

export function scenario_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly barrier_recovery: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly double_s: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly scenario_names: () => [number, number];
    readonly simulation_new: (a: number, b: number, c: bigint, d: number) => [number, number, number];
    readonly simulation_step: (a: number) => [number, number];
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
