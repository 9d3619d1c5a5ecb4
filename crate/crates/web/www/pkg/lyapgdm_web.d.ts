/* tslint:disable */
/* eslint-disable */

/**
 * One simulated episode, flattened for JavaScript.
 */
export class Flight {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Device coordinates as `[x1, y1, x2, y2, ...]`.
     */
    devices(): Float64Array;
    energy(): Float64Array;
    final_queue(): number;
    mean_energy(): number;
    mean_rate(): number;
    queue(): Float64Array;
    rate(): Float64Array;
    /**
     * Positions include the start point, so they have `T + 1` entries.
     */
    xs(): Float64Array;
    ys(): Float64Array;
}

export function fly(policy: string, bandwidth_mhz: number, v_weight: number, seed: bigint): Flight;

export function noise_schedule(steps: number, beta_min: number, beta_max: number): Float64Array;

export function propulsion_curve(v_max: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_flight_free: (a: number, b: number) => void;
    readonly flight_devices: (a: number) => [number, number];
    readonly flight_energy: (a: number) => [number, number];
    readonly flight_final_queue: (a: number) => number;
    readonly flight_mean_energy: (a: number) => number;
    readonly flight_mean_rate: (a: number) => number;
    readonly flight_queue: (a: number) => [number, number];
    readonly flight_rate: (a: number) => [number, number];
    readonly flight_xs: (a: number) => [number, number];
    readonly flight_ys: (a: number) => [number, number];
    readonly fly: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly noise_schedule: (a: number, b: number, c: number) => [number, number, number, number];
    readonly propulsion_curve: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
