pub mod perft_oracle;
