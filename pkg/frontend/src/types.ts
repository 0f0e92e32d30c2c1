/** Shared types for the sounderfeit web UI. */

export interface ParamDescriptor {
  name: string;          // "y0", "y1", "z0", ...
  kind: "cond" | "latent";
  label: string;         // e.g. "pressure" for y dims
}

export interface ModelMetadata {
  condition: string;
  n_latent: number;
  n_cond: number;
  params: ParamDescriptor[];
  corpus_hash: string;
  sample_rate: number;
}

export interface SetMessage {
  type: "set";
  name: string;
  value: number;
}

export interface AckMessage {
  type: "ack";
  name: string;
  value: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = AckMessage | ErrorMessage;
