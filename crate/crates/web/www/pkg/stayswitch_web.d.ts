/* tslint:disable */
/* eslint-disable */

/**
 * Congestion model sampled at `points` attempt rates in `[0, g_max]`.
 * Returns rows of `[G, S, t_w, t_c, t_s]`, flattened.
 */
export function congestion_curves(t: number, mean_backoff: number, g_max: number, points: number): Float64Array;

/**
 * Nested policy for exponential channels with the given means, sensed in
 * order, every channel carrying attempt rate `load`.
 */
export function iid_policy(means: Float64Array, load: number, t: number, mean_backoff: number): string;

/**
 * Decision table for birth-death channels, one per row of `rewards`
 * (`n_states` values each, flattened), moving up with probability `up`.
 */
export function markov_policy(rewards: Float64Array, n_states: number, up: number, load: number, t: number, mean_backoff: number, exact_discount: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly congestion_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly iid_policy: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly markov_policy: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
