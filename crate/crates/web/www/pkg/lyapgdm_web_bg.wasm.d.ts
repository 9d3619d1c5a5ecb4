/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_flight_free: (a: number, b: number) => void;
export const flight_devices: (a: number) => [number, number];
export const flight_energy: (a: number) => [number, number];
export const flight_final_queue: (a: number) => number;
export const flight_mean_energy: (a: number) => number;
export const flight_mean_rate: (a: number) => number;
export const flight_queue: (a: number) => [number, number];
export const flight_rate: (a: number) => [number, number];
export const flight_xs: (a: number) => [number, number];
export const flight_ys: (a: number) => [number, number];
export const fly: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const noise_schedule: (a: number, b: number, c: number) => [number, number, number, number];
export const propulsion_curve: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
