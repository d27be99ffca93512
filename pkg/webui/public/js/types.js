/** Wire types for the challenge-search HTTP API. */
export {};
